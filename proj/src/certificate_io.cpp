#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "exphormer/error.hpp"
#include "exphormer/expander.hpp"

namespace exphormer {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(const std::string& text, const std::string& key, std::size_t line) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("bad value for " + key + ": '" + text + "'", line);
  }
  return value;
}

bool parse_bool(const std::string& text, const std::string& key, std::size_t line) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ParseError("expected true/false for " + key, line);
}

}  // namespace

void write_certificate(std::ostream& out, const GenerationCertificate& cert) {
  out << "variant=" << to_string(cert.variant) << '\n'
      << "seed=" << cert.seed << '\n'
      << "n=" << cert.n << '\n'
      << "d=" << cert.d << '\n'
      << "slack=" << shortest(cert.slack) << '\n'
      << "retries=" << cert.retries << '\n'
      << "strip_self_loops=" << (cert.strip_self_loops ? "true" : "false") << '\n'
      << "passed_spectral=" << (cert.passed_spectral ? "true" : "false") << '\n'
      << "achieved_bound=" << shortest(cert.achieved_bound) << '\n';
  if (cert.hamiltonian_cycles) {
    out << "cycles=" << cert.hamiltonian_cycles->size() << '\n';
    for (std::size_t k = 0; k < cert.hamiltonian_cycles->size(); ++k) {
      out << "cycle." << k << '=';
      const auto& cycle = (*cert.hamiltonian_cycles)[k];
      for (std::size_t i = 0; i < cycle.size(); ++i) out << (i ? " " : "") << cycle[i];
      out << '\n';
    }
  }
}

GenerationCertificate read_certificate(std::istream& in) {
  GenerationCertificate cert;
  std::map<std::string, std::size_t> seen;
  std::map<std::size_t, std::vector<NodeId>> cycles;
  std::optional<std::size_t> cycle_count;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (!seen.emplace(key, line_no).second) throw ParseError("duplicate key " + key, line_no);

    if (key == "variant") {
      try {
        cert.variant = parse_variant(value);
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), line_no);
      }
    } else if (key == "seed") {
      cert.seed = parse_number<std::uint64_t>(value, key, line_no);
    } else if (key == "n") {
      cert.n = parse_number<std::size_t>(value, key, line_no);
    } else if (key == "d") {
      cert.d = parse_number<std::size_t>(value, key, line_no);
    } else if (key == "slack") {
      cert.slack = parse_number<double>(value, key, line_no);
    } else if (key == "retries") {
      cert.retries = parse_number<std::size_t>(value, key, line_no);
    } else if (key == "strip_self_loops") {
      cert.strip_self_loops = parse_bool(value, key, line_no);
    } else if (key == "passed_spectral") {
      cert.passed_spectral = parse_bool(value, key, line_no);
    } else if (key == "achieved_bound") {
      cert.achieved_bound = parse_number<double>(value, key, line_no);
    } else if (key == "cycles") {
      cycle_count = parse_number<std::size_t>(value, key, line_no);
    } else if (key.rfind("cycle.", 0) == 0) {
      const auto k = parse_number<std::size_t>(key.substr(6), key, line_no);
      std::istringstream vs(value);
      std::vector<NodeId> cycle;
      long long v = 0;
      while (vs >> v) {
        if (v < 0) throw ParseError("negative node in " + key, line_no);
        cycle.push_back(static_cast<NodeId>(v));
      }
      if (!vs.eof()) throw ParseError("bad node list in " + key, line_no);
      cycles[k] = std::move(cycle);
    } else {
      throw ParseError("unknown certificate key " + key, line_no);
    }
  }
  for (const char* required : {"variant", "seed", "n", "d", "slack", "retries", "passed_spectral", "achieved_bound"}) {
    if (!seen.count(required)) throw ParseError(std::string("certificate is missing ") + required, line_no);
  }
  if (cycle_count) {
    if (cycles.size() != *cycle_count) throw ParseError("cycle count does not match cycle lines", line_no);
    std::vector<std::vector<NodeId>> ordered;
    for (std::size_t k = 0; k < *cycle_count; ++k) {
      const auto it = cycles.find(k);
      if (it == cycles.end()) throw ParseError("missing cycle." + std::to_string(k), line_no);
      ordered.push_back(it->second);
    }
    cert.hamiltonian_cycles = std::move(ordered);
  } else if (!cycles.empty()) {
    throw ParseError("cycle lines without a cycles= count", line_no);
  }
  return cert;
}

}  // namespace exphormer
