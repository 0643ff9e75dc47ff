#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "exphormer/error.hpp"
#include "exphormer/pattern.hpp"

namespace exphormer {

namespace {

constexpr int kPatternFormatVersion = 1;

std::string flags_string(const PatternFlags& f) {
  std::string s = "----";
  if (f.local) s[0] = 'L';
  if (f.expander) s[1] = 'X';
  if (f.global) s[2] = 'G';
  if (f.self_loops) s[3] = 'S';
  return s;
}

std::optional<PatternFlags> parse_flags(const std::string& s) {
  static constexpr char kLetters[] = "LXGS";
  if (s.size() != 4) return std::nullopt;
  bool bits[4];
  for (int i = 0; i < 4; ++i) {
    if (s[i] == kLetters[i]) {
      bits[i] = true;
    } else if (s[i] == '-') {
      bits[i] = false;
    } else {
      return std::nullopt;
    }
  }
  return PatternFlags{bits[0], bits[1], bits[2], bits[3]};
}

}  // namespace

void export_pattern(std::ostream& out, const AttentionPattern& p) {
  out << "EXPH " << kPatternFormatVersion << ' ' << p.n_real() << ' ' << p.n_virtual() << ' '
      << flags_string(p.flags()) << '\n';
  for (NodeId t = 0; t < p.num_nodes(); ++t) {
    for (const auto& e : p.incoming(t)) {
      out << e.source << ' ' << t << ' ' << kind_tag(e.kind) << ' ' << e.feature << '\n';
    }
  }
  out << "END " << p.num_edges() << '\n';
}

AttentionPattern import_pattern(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t last_valid = 0;

  if (!std::getline(in, line)) throw ParseError("empty pattern file", 0);
  ++line_no;
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  long long n_real = -1;
  long long n_virtual = -1;
  std::string flag_text;
  if (!(header >> magic) || magic != "EXPH") throw ParseError("missing EXPH header", line_no);
  if (!(header >> version)) throw ParseError("missing format version", line_no);
  if (version != kPatternFormatVersion) {
    throw ParseError("unsupported pattern format version " + std::to_string(version), line_no);
  }
  if (!(header >> n_real >> n_virtual >> flag_text) || n_real <= 0 || n_virtual < 0) {
    throw ParseError("expected 'EXPH 1 n_real n_virtual flags'", line_no);
  }
  const auto flags = parse_flags(flag_text);
  if (!flags) throw ParseError("bad flags field '" + flag_text + "'", line_no);
  last_valid = line_no;

  const long long total = n_real + n_virtual;
  std::vector<DirectedEdge> edges;
  bool ended = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (ended) throw ParseError("content after END", line_no);
    std::istringstream ls(line);
    std::string first;
    ls >> first;
    if (first == "END") {
      long long count = -1;
      if (!(ls >> count)) throw ParseError("END needs an edge count", line_no);
      if (count != static_cast<long long>(edges.size())) {
        throw ParseError("END declares " + std::to_string(count) + " edges, read " + std::to_string(edges.size()),
                         line_no);
      }
      ended = true;
      last_valid = line_no;
      continue;
    }
    long long src = -1;
    long long dst = -1;
    std::string tag;
    long long feat = -2;
    std::istringstream es(line);
    std::string extra;
    if (!(es >> src >> dst >> tag >> feat) || (es >> extra)) {
      throw ParseError("malformed edge line (last valid line " + std::to_string(last_valid) + ")", line_no);
    }
    if (src < 0 || dst < 0 || src >= total || dst >= total) throw ParseError("edge endpoint out of range", line_no);
    const auto kind = tag.size() == 1 ? kind_from_tag(tag[0]) : std::nullopt;
    if (!kind) throw ParseError("unknown edge kind '" + tag + "'", line_no);
    if (feat < -1 || feat > std::numeric_limits<std::int32_t>::max()) throw ParseError("bad feature index", line_no);
    edges.push_back({static_cast<NodeId>(src), static_cast<NodeId>(dst), *kind, static_cast<std::int32_t>(feat)});
    last_valid = line_no;
  }
  if (!ended) throw ParseError("truncated pattern file; last valid line " + std::to_string(last_valid), last_valid);

  AttentionPattern p;
  try {
    p = AttentionPattern::from_edges(static_cast<std::size_t>(n_real), static_cast<std::size_t>(n_virtual), *flags,
                                     std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line_no);
  }
  if (const auto bad = p.invariant_violations(); !bad.empty()) {
    throw ParseError("pattern violates invariants: " + bad.front(), line_no);
  }
  return p;
}

}  // namespace exphormer
