#include "cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "exphormer/error.hpp"
#include "exphormer/expander.hpp"
#include "exphormer/graph.hpp"
#include "exphormer/pattern.hpp"
#include "exphormer/spectral.hpp"
#include "exphormer/suites.hpp"
#include "exphormer/train.hpp"

namespace exphormer::cli {

namespace {

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string yes_no(bool b) { return b ? "true" : "false"; }

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << contents;
  if (!out.flush()) throw Error("failed writing '" + path + "'");
}

MultiGraph load_graph(const std::string& path) {
  auto in = open_in(path);
  return read_edge_list(in);
}

// Everything needed to replay a run: the argument vector, the resolved
// configuration, the seeds, and digests of what was read and written.
struct Manifest {
  std::string subcommand;
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::pair<std::string, std::string>> extra;

  void set(std::string key, std::string value) { config.emplace_back(std::move(key), std::move(value)); }

  void write(const std::string& path) const {
    std::ostringstream os;
    os << "tool=exphormer\nversion=" << kToolVersion << "\nsubcommand=" << subcommand << '\n';
    os << "argc=" << argv.size() << '\n';
    for (std::size_t i = 0; i < argv.size(); ++i) os << "argv." << i << '=' << argv[i] << '\n';
    for (const auto& [k, v] : config) os << "config." << k << '=' << v << '\n';
    for (const auto& [k, v] : seeds) os << "seed." << k << '=' << v << '\n';
    for (const auto& f : inputs) os << "input.sha256." << f << '=' << file_sha256(f) << '\n';
    for (const auto& f : outputs) os << "output.sha256." << f << '=' << file_sha256(f) << '\n';
    for (const auto& [k, v] : extra) os << k << '=' << v << '\n';
    write_file(path, os.str());
  }
};

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::size_t n = 0;
  std::size_t d = 0;
  std::string variant = "standard";
  std::uint64_t seed = 0;
  std::optional<double> slack;
  std::size_t max_retries = 20;
  bool keep_self_loops = false;
  std::string out;
};

int cmd_generate(const GenerateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  ExpanderConfig cfg;
  cfg.n = a.n;
  cfg.d = a.d;
  cfg.variant = parse_variant(a.variant);
  cfg.seed = a.seed;
  cfg.slack = a.slack;
  cfg.max_retries = a.max_retries;
  cfg.strip_self_loops = !a.keep_self_loops;
  const GeneratedExpander x = generate_verified(cfg);

  std::ostringstream graph_text;
  write_edge_list(graph_text, x.graph);
  write_file(a.out, graph_text.str());
  std::ostringstream cert_text;
  write_certificate(cert_text, x.certificate);
  const std::string cert_path = a.out + ".cert";
  write_file(cert_path, cert_text.str());

  Manifest m;
  m.subcommand = "generate";
  m.argv = argv;
  m.set("n", std::to_string(cfg.n));
  m.set("d", std::to_string(cfg.d));
  m.set("variant", std::string(to_string(cfg.variant)));
  m.set("slack", num(cfg.resolved_slack()));
  m.set("max_retries", std::to_string(cfg.max_retries));
  m.set("strip_self_loops", yes_no(cfg.strip_self_loops));
  m.seeds.emplace_back("expander", cfg.seed);
  m.outputs = {a.out, cert_path};
  m.write(a.out + ".manifest");

  out << "n=" << cfg.n << "\nd=" << cfg.d << "\nvariant=" << to_string(cfg.variant) << "\nretries="
      << x.certificate.retries << "\nachieved_bound=" << num(x.certificate.achieved_bound)
      << "\nthreshold=" << num(cfg.threshold()) << "\nedges=" << x.graph.num_distinct_edges() << "\nout=" << a.out
      << "\ncertificate=" << cert_path << '\n';
  return kExitOk;
}

// ---- spectrum ---------------------------------------------------------------

struct SpectrumArgs {
  std::string in;
  std::optional<double> eps;
  std::optional<double> slack;
  std::optional<std::size_t> pe;
  std::string report;
};

int cmd_spectrum(const SpectrumArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const MultiGraph g = load_graph(a.in);
  const SpectralReport r = adjacency_spectrum(g);
  std::ostringstream os;
  os << "n=" << r.n << "\nd_max=" << r.d_max << "\nregular=" << yes_no(g.regular_degree().has_value())
     << "\nconnected=" << yes_no(is_connected(g)) << "\nnontrivial_bound=" << num(r.nontrivial_bound) << '\n';
  if (r.epsilon) os << "epsilon=" << num(*r.epsilon) << '\n';
  if (r.ramanujan_margin) os << "ramanujan_margin=" << num(*r.ramanujan_margin) << '\n';
  os << "laplacian_nontrivial_min=" << num(r.laplacian_nontrivial_range.first)
     << "\nlaplacian_nontrivial_max=" << num(r.laplacian_nontrivial_range.second) << '\n';
  if (a.eps) {
    os << "eps=" << num(*a.eps) << '\n';
    if (!r.epsilon) {
      os << "epsilon_expander=n/a\n";  // defined for regular graphs only
    } else {
      os << "epsilon_expander=" << yes_no(is_epsilon_expander(g, *a.eps)) << '\n';
      if (is_connected(g)) os << "laplacian_approx=" << yes_no(laplacian_approx_check(g, *a.eps)) << '\n';
    }
  }
  if (a.slack) {
    // Irregular input (e.g. after self-loop stripping) is compared against
    // the threshold for its maximum degree.
    const RamanujanCheck c = near_ramanujan_from_spectrum(r.eigenvalues, r.d_max, *a.slack);
    os << "slack=" << num(*a.slack) << "\nachieved_bound=" << num(c.achieved_bound)
       << "\nthreshold=" << num(c.threshold) << "\nnear_ramanujan=" << yes_no(c.passed) << '\n';
  }
  os << "eigenvalues=";
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) os << (i ? " " : "") << num(r.eigenvalues[i]);
  os << '\n';
  if (a.pe) {
    const Eigen::MatrixXd pe = laplacian_pe(g, *a.pe);
    os << "pe_rows=" << pe.rows() << "\npe_cols=" << pe.cols() << "\nnode";
    for (Eigen::Index j = 0; j < pe.cols(); ++j) os << ",pe" << j;
    os << '\n';
    for (Eigen::Index i = 0; i < pe.rows(); ++i) {
      os << i;
      for (Eigen::Index j = 0; j < pe.cols(); ++j) os << ',' << num(pe(i, j));
      os << '\n';
    }
  }
  out << os.str();
  if (!a.report.empty()) {
    write_file(a.report, os.str());
    Manifest m;
    m.subcommand = "spectrum";
    m.argv = argv;
    if (a.eps) m.set("eps", num(*a.eps));
    if (a.slack) m.set("slack", num(*a.slack));
    if (a.pe) m.set("pe", std::to_string(*a.pe));
    m.inputs = {a.in};
    m.outputs = {a.report};
    m.write(a.report + ".manifest");
  }
  return kExitOk;
}

// ---- pattern ----------------------------------------------------------------

struct PatternArgs {
  std::string in;
  std::size_t virtual_nodes = 1;
  std::size_t expander_d = 0;
  std::string variant = "standard";
  std::uint64_t seed = 0;
  std::optional<double> slack;
  bool no_local = false;
  bool no_self_loops = false;
  std::string out;
};

int cmd_pattern(const PatternArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const MultiGraph g = load_graph(a.in);
  PatternConfig cfg;
  cfg.use_local = !a.no_local;
  cfg.num_virtual = a.virtual_nodes;
  cfg.self_loops = !a.no_self_loops;
  if (a.expander_d > 0) {
    ExpanderConfig ec;
    ec.n = g.num_nodes();
    ec.d = a.expander_d;
    ec.variant = parse_variant(a.variant);
    ec.seed = a.seed;
    ec.slack = a.slack;
    cfg.expander = ec;
  }
  const BuiltPattern built = build_pattern(g, cfg);

  std::ostringstream text;
  export_pattern(text, built.pattern);
  write_file(a.out, text.str());
  Manifest m;
  m.subcommand = "pattern";
  m.argv = argv;
  m.set("use_local", yes_no(cfg.use_local));
  m.set("num_virtual", std::to_string(cfg.num_virtual));
  m.set("self_loops", yes_no(cfg.self_loops));
  m.set("expander_d", std::to_string(a.expander_d));
  if (cfg.expander) {
    m.set("expander_variant", std::string(to_string(cfg.expander->variant)));
    m.set("expander_slack", num(cfg.expander->resolved_slack()));
    m.seeds.emplace_back("expander", cfg.expander->seed);
  }
  m.inputs = {a.in};
  m.outputs = {a.out};
  if (built.certificate) {
    std::ostringstream cert_text;
    write_certificate(cert_text, *built.certificate);
    write_file(a.out + ".cert", cert_text.str());
    m.outputs.push_back(a.out + ".cert");
  }
  m.write(a.out + ".manifest");

  const EdgeBudget b = edge_budget(built.pattern);
  out << "n_real=" << built.pattern.n_real() << "\nn_virtual=" << built.pattern.n_virtual()
      << "\nedges=" << b.total() << "\nedges.local=" << b.local << "\nedges.expander=" << b.expander
      << "\nedges.global=" << b.global << "\nedges.self_loop=" << b.self_loop << "\nout=" << a.out << '\n';
  return kExitOk;
}

// ---- mixing -----------------------------------------------------------------

struct MixingArgs {
  std::string in;
  double delta = 1e-3;
  NodeId start = 0;
  std::optional<double> eps;
  std::string report;
};

int cmd_mixing(const MixingArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const MultiGraph g = load_graph(a.in);
  if (a.start >= g.num_nodes()) throw std::invalid_argument("--start is not a node of the graph");
  const SpectralReport r = adjacency_spectrum(g);
  if (!r.epsilon) throw std::invalid_argument("mixing analysis needs a regular graph");
  // The walk first: a graph without a spectral gap is a NoConvergence
  // failure, not a bad eps argument.
  const std::size_t t = empirical_mixing_time(g, a.delta, a.start);
  const double eps = a.eps.value_or(*r.epsilon);
  const MixingBound bound = mixing_bound(g.num_nodes(), eps, a.delta);

  std::ostringstream os;
  os << "n=" << g.num_nodes() << "\nd=" << r.d_max << "\nepsilon=" << num(eps) << "\ndelta=" << num(a.delta)
     << "\nstart=" << a.start << "\nt_bound=" << bound.t_bound << "\nempirical=" << t
     << "\nwithin_bound=" << yes_no(t <= bound.t_bound) << "\nstep,distance\n";
  WalkDistribution dist = WalkDistribution::point_mass(g.num_nodes(), a.start);
  for (std::size_t s = 0; s <= t; ++s) {
    os << s << ',' << num(dist.distance_to_uniform()) << '\n';
    if (s < t) dist = walk_step(g, dist);
  }
  out << os.str();
  if (!a.report.empty()) {
    write_file(a.report, os.str());
    Manifest m;
    m.subcommand = "mixing";
    m.argv = argv;
    m.set("delta", num(a.delta));
    m.set("start", std::to_string(a.start));
    m.set("epsilon", num(eps));
    m.inputs = {a.in};
    m.outputs = {a.report};
    m.write(a.report + ".manifest");
  }
  return kExitOk;
}

// ---- check ------------------------------------------------------------------

struct CheckArgs {
  std::string pattern;
  std::string cert;
  std::string suite;
  bool quick = false;
  std::uint64_t seed = 2024;
};

int cmd_check(const CheckArgs& a, std::ostream& out) {
  if (a.pattern.empty() == a.suite.empty()) throw std::invalid_argument("check needs exactly one of --pattern or --suite");
  if (!a.pattern.empty()) {
    auto in = open_in(a.pattern);
    const AttentionPattern p = import_pattern(in);
    std::optional<GenerationCertificate> cert;
    std::string cert_path = a.cert;
    if (cert_path.empty() && std::ifstream(a.pattern + ".cert")) cert_path = a.pattern + ".cert";
    if (!cert_path.empty()) {
      auto cin = open_in(cert_path);
      cert = read_certificate(cin);
    }
    const UniversalityReport u = universality_precondition(p, cert);
    const EdgeBudget b = edge_budget(p);
    const auto reach = reachability_layers(p);
    out << "n_real=" << p.n_real() << "\nn_virtual=" << p.n_virtual() << "\nedges=" << b.total()
        << "\nedges.local=" << b.local << "\nedges.expander=" << b.expander << "\nedges.global=" << b.global
        << "\nedges.self_loop=" << b.self_loop << "\ncertificate=" << (cert_path.empty() ? "none" : cert_path)
        << "\nuniversality.star=" << yes_no(u.star) << "\nuniversality.hamiltonian=" << yes_no(u.hamiltonian)
        << "\nuniversality.self_loops=" << yes_no(u.self_loops) << "\nuniversality.satisfied=" << yes_no(u.satisfied)
        << "\nreachability_layers=" << (reach ? std::to_string(*reach) : "inf") << '\n';
    return kExitOk;
  }

  SuiteOptions opts;
  opts.quick = a.quick;
  opts.seed = a.seed;
  const auto results = run_suites(a.suite, opts);
  bool ok = true;
  for (const auto& r : results) {
    for (const auto& [k, v] : r.metrics) out << "criterion" << r.criterion << '.' << k << '=' << v << '\n';
  }
  for (const auto& r : results) {
    ok = ok && r.passed;
    out << "criterion" << r.criterion << ".result=" << (r.passed ? "PASS" : "FAIL") << "  # " << r.name << '\n';
  }
  out << "suite=" << a.suite << "\npassed=" << yes_no(ok) << '\n';
  return ok ? kExitOk : kExitDomain;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string task = "global-mean";
  std::string pattern_config;
  std::size_t steps = 500;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> task_seed;
  std::size_t graphs = 100;
  std::size_t nodes = 32;
  std::string report;
};

// key=value lines; unknown keys are errors.
void apply_pattern_config(const std::string& path, TrainConfig& cfg) {
  auto in = open_in(path);
  std::string line;
  std::size_t line_no = 0;
  std::optional<ExpanderConfig> ec;
  auto to_bool = [&](const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ParseError("expected true/false", line_no);
  };
  auto to_size = [&](const std::string& v) {
    std::size_t x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ParseError("expected an integer", line_no);
    return x;
  };
  auto to_double = [&](const std::string& v) {
    double x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw ParseError("expected a number", line_no);
    return x;
  };
  auto expander = [&]() -> ExpanderConfig& {
    if (!ec) ec = ExpanderConfig{};
    return *ec;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const std::string key = line.substr(first, eq - first);
    const std::string v = line.substr(eq + 1);
    if (key == "use_local") cfg.pattern.use_local = to_bool(v);
    else if (key == "num_virtual") cfg.pattern.num_virtual = to_size(v);
    else if (key == "self_loops") cfg.pattern.self_loops = to_bool(v);
    else if (key == "expander_d") expander().d = to_size(v);
    else if (key == "expander_variant") expander().variant = parse_variant(v);
    else if (key == "expander_seed") expander().seed = to_size(v);
    else if (key == "expander_slack") expander().slack = to_double(v);
    else if (key == "expander_max_retries") expander().max_retries = to_size(v);
    else if (key == "layers") cfg.layers = to_size(v);
    else if (key == "model_dim") cfg.model_dim = to_size(v);
    else if (key == "heads") cfg.heads = to_size(v);
    else if (key == "head_dim") cfg.head_dim = to_size(v);
    else if (key == "ff_dim") cfg.ff_dim = to_size(v);
    else if (key == "edge_dim") cfg.edge_dim = to_size(v);
    else if (key == "batch_size") cfg.batch_size = to_size(v);
    else if (key == "learning_rate") cfg.learning_rate = to_double(v);
    else if (key == "edge_features") cfg.attention.edge_features = to_bool(v);
    else if (key == "scale_logits") cfg.attention.scale_logits = to_bool(v);
    else throw ParseError("unknown pattern-config key '" + key + "'", line_no);
  }
  // expander_d = 0 switches the component off.
  if (ec && ec->d > 0) {
    cfg.pattern.expander = ec;
  } else {
    cfg.pattern.expander.reset();
  }
}

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  TrainConfig cfg;
  if (!a.pattern_config.empty()) apply_pattern_config(a.pattern_config, cfg);
  cfg.steps = a.steps;
  cfg.seed = a.seed;
  const TaskKind kind = parse_task_kind(a.task);
  const std::uint64_t task_seed = a.task_seed.value_or(a.seed);
  const SyntheticTask task = make_task(kind, a.graphs, a.nodes, task_seed);
  const TrainReport r = train_loop(task, cfg);

  std::vector<std::pair<std::string, std::string>> config = {
      {"task", std::string(to_string(kind))},
      {"graphs", std::to_string(a.graphs)},
      {"nodes_per_graph", std::to_string(a.nodes)},
      {"steps", std::to_string(cfg.steps)},
      {"layers", std::to_string(cfg.layers)},
      {"model_dim", std::to_string(cfg.model_dim)},
      {"heads", std::to_string(cfg.heads)},
      {"head_dim", std::to_string(cfg.head_dim)},
      {"ff_dim", std::to_string(cfg.ff_dim)},
      {"edge_dim", std::to_string(cfg.edge_dim)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"learning_rate", num(cfg.learning_rate)},
      {"beta1", num(cfg.beta1)},
      {"beta2", num(cfg.beta2)},
      {"adam_eps", num(cfg.adam_eps)},
      {"use_local", yes_no(cfg.pattern.use_local)},
      {"num_virtual", std::to_string(cfg.pattern.num_virtual)},
      {"self_loops", yes_no(cfg.pattern.self_loops)},
      {"expander_d", std::to_string(cfg.pattern.expander ? cfg.pattern.expander->d : 0)},
      {"edge_features", yes_no(cfg.attention.edge_features)},
      {"scale_logits", yes_no(cfg.attention.scale_logits)},
  };
  if (cfg.pattern.expander) {
    config.emplace_back("expander_variant", std::string(to_string(cfg.pattern.expander->variant)));
    config.emplace_back("expander_slack", num(cfg.pattern.expander->resolved_slack()));
  }

  std::ostringstream os;
  for (const auto& [k, v] : config) os << k << '=' << v << '\n';
  os << "task_seed=" << task_seed << "\ntrain_seed=" << cfg.seed << '\n';
  if (cfg.pattern.expander) os << "expander_seed=" << cfg.pattern.expander->seed << '\n';
  os << "edge_budget.local=" << r.edge_budget.local << "\nedge_budget.expander=" << r.edge_budget.expander
     << "\nedge_budget.global=" << r.edge_budget.global << "\nedge_budget.self_loop=" << r.edge_budget.self_loop
     << "\nedge_budget.total=" << r.edge_budget.total() << "\ninitial_train_accuracy=" << num(r.initial_train_accuracy)
     << "\ninitial_test_accuracy=" << num(r.initial_test_accuracy) << "\ntrain_accuracy=" << num(r.train_accuracy)
     << "\ntest_accuracy=" << num(r.test_accuracy) << '\n';
  if (!r.losses.empty()) {
    os << "initial_loss=" << num(r.losses.front()) << "\nfinal_loss=" << num(r.losses.back()) << '\n';
  }
  os << "step,loss\n";
  for (std::size_t s = 0; s < r.losses.size(); ++s) os << s << ',' << num(r.losses[s]) << '\n';

  // Wall-clock goes to stdout and the manifest, keeping the report itself
  // byte-reproducible.
  out << "seconds_per_step=" << num(r.seconds_per_step) << "\ntrain_accuracy=" << num(r.train_accuracy)
      << "\ntest_accuracy=" << num(r.test_accuracy) << '\n';
  if (!a.report.empty()) {
    write_file(a.report, os.str());
    Manifest m;
    m.subcommand = "train";
    m.argv = argv;
    m.config = config;
    m.seeds = {{"task", task_seed}, {"train", cfg.seed}};
    if (cfg.pattern.expander) m.seeds.emplace_back("expander", cfg.pattern.expander->seed);
    if (!a.pattern_config.empty()) m.inputs = {a.pattern_config};
    m.outputs = {a.report};
    m.extra = {{"timing.seconds_per_step", num(r.seconds_per_step)}};
    m.write(a.report + ".manifest");
  } else {
    out << os.str();
  }
  return kExitOk;
}

// ---- replay -----------------------------------------------------------------

int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  auto in = open_in(manifest_path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!kv.count("argc")) throw ParseError("manifest has no argc", line_no);
  const std::size_t argc = std::stoul(kv["argc"]);
  std::vector<std::string> args;
  for (std::size_t i = 0; i < argc; ++i) {
    const auto it = kv.find("argv." + std::to_string(i));
    if (it == kv.end()) throw ParseError("manifest is missing argv." + std::to_string(i), line_no);
    args.push_back(it->second);
  }
  std::vector<std::pair<std::string, std::string>> expected;
  const std::string prefix = "output.sha256.";
  for (const auto& [k, v] : kv) {
    if (k.rfind(prefix, 0) == 0) expected.emplace_back(k.substr(prefix.size()), v);
  }

  std::ostringstream sink;
  const int code = run(args, sink, err);
  if (code != kExitOk) {
    out << "replay_exit=" << code << '\n';
    return code;
  }
  bool same = true;
  for (const auto& [path, digest] : expected) {
    const bool match = file_sha256(path) == digest;
    same = same && match;
    out << "output." << path << '=' << (match ? "identical" : "differs") << '\n';
  }
  out << "replay_identical=" << yes_no(same) << '\n';
  return same ? kExitOk : kExitDomain;
}

template <typename T>
void add_optional(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

}  // namespace

std::string file_sha256(const std::string& path) {
  auto in = open_in(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 unavailable");
  }
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof(buf));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exphormer sparse-attention toolkit", "exphormer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a verified near-Ramanujan expander");
  g->add_option("--n", gen.n, "Number of nodes")->required();
  g->add_option("--d", gen.d, "Even degree")->required();
  g->add_option("--variant", gen.variant, "standard|simple|hamiltonian")
      ->check(CLI::IsMember({"standard", "simple", "hamiltonian"}));
  g->add_option("--seed", gen.seed, "Random seed");
  add_optional(g, "--slack", gen.slack, "Additive slack over 2 sqrt(d-1) (default 0.1 d)");
  g->add_option("--max-retries", gen.max_retries, "Candidate draws before giving up");
  g->add_flag("--keep-self-loops", gen.keep_self_loops, "Do not strip self-loops after acceptance");
  g->add_option("--out", gen.out, "Edge-list output file")->required();

  SpectrumArgs spec;
  auto* s = app.add_subcommand("spectrum", "Spectral report of a graph");
  s->add_option("--in", spec.in, "Edge-list file")->required();
  add_optional(s, "--eps", spec.eps, "Check the epsilon-expander and Laplacian approximation properties");
  add_optional(s, "--slack", spec.slack, "Check the near-Ramanujan property with this slack");
  add_optional(s, "--pe", spec.pe, "Emit K Laplacian positional encodings");
  s->add_option("--report", spec.report, "Also write the report to this file");

  PatternArgs pat;
  auto* p = app.add_subcommand("pattern", "Assemble an attention pattern for a graph");
  p->add_option("--in", pat.in, "Edge-list file")->required();
  p->add_option("--virtual", pat.virtual_nodes, "Number of virtual (global) nodes");
  p->add_option("--expander-d", pat.expander_d, "Expander degree; 0 disables the component");
  p->add_option("--variant", pat.variant, "standard|simple|hamiltonian")
      ->check(CLI::IsMember({"standard", "simple", "hamiltonian"}));
  p->add_option("--seed", pat.seed, "Expander seed");
  add_optional(p, "--slack", pat.slack, "Expander acceptance slack");
  p->add_flag("--no-local", pat.no_local, "Omit local (input-graph) edges");
  p->add_flag("--no-self-loops", pat.no_self_loops, "Omit self-loop edges");
  p->add_option("--out", pat.out, "Pattern output file")->required();

  MixingArgs mix;
  auto* x = app.add_subcommand("mixing", "Random-walk mixing analysis of a regular graph");
  x->add_option("--in", mix.in, "Edge-list file")->required();
  x->add_option("--delta", mix.delta, "Target L1 distance to uniform")->check(CLI::PositiveNumber);
  x->add_option("--start", mix.start, "Start node of the walk");
  add_optional(x, "--eps", mix.eps, "Override the measured epsilon in the bound");
  x->add_option("--report", mix.report, "Also write the report to this file");

  CheckArgs chk;
  auto* c = app.add_subcommand("check", "Report on a pattern file or run property suites");
  auto* c_pattern = c->add_option("--pattern", chk.pattern, "Pattern file to report on");
  c->add_option("--cert", chk.cert, "Certificate (default: PATTERN.cert when present)")->needs(c_pattern);
  std::vector<std::string> suite_choices;
  for (auto n : suite_names()) suite_choices.emplace_back(n);
  auto* c_suite = c->add_option("--suite", chk.suite, "Property suite to run")->check(CLI::IsMember(suite_choices));
  c_pattern->excludes(c_suite);
  c->add_flag("--quick", chk.quick, "Smaller suite sizes")->needs(c_suite);
  c->add_option("--seed", chk.seed, "Suite seed")->needs(c_suite);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train on a synthetic task and report");
  t->add_option("--task", tr.task, "global-mean|planted")->check(CLI::IsMember({"global-mean", "planted"}));
  t->add_option("--pattern-config", tr.pattern_config, "key=value pattern and model configuration");
  t->add_option("--steps", tr.steps, "Optimizer steps");
  t->add_option("--seed", tr.seed, "Training seed (also the task seed unless --task-seed)");
  add_optional(t, "--task-seed", tr.task_seed, "Dataset seed");
  t->add_option("--graphs", tr.graphs, "Graphs in the task");
  t->add_option("--nodes", tr.nodes, "Nodes per graph");
  t->add_option("--report", tr.report, "Report file (key=value header, step,loss CSV)");

  std::string manifest;
  auto* r = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
  r->add_option("--manifest", manifest, "Manifest file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, args, out);
    if (s->parsed()) return cmd_spectrum(spec, args, out);
    if (p->parsed()) return cmd_pattern(pat, args, out);
    if (x->parsed()) return cmd_mixing(mix, args, out);
    if (c->parsed()) return cmd_check(chk, out);
    if (t->parsed()) return cmd_train(tr, args, out);
    if (r->parsed()) return cmd_replay(manifest, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace exphormer::cli
