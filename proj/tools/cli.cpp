#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kdc/kdc.hpp"

namespace kdc::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// A flag together with the option that fills it, so resolution can tell
// "given on the command line" from "left at its default".
template <class T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;

  bool given() const { return opt != nullptr && opt->count() > 0; }
};

template <class T>
CLI::Option* option(CLI::App* app, const std::string& name, Flag<T>& flag,
                    const std::string& help) {
  flag.opt = app->add_option(name, flag.value, help);
  return flag.opt;
}

// Precedence: flag, then the JSON config (first matching key), then nothing.
template <class T>
std::optional<T> lookup(const Flag<T>& flag, const json& config,
                        std::initializer_list<const char*> keys) {
  if (flag.given()) return flag.value;
  for (const char* key : keys) {
    if (config.contains(key) && !config.at(key).is_null()) return config.at(key).get<T>();
  }
  return std::nullopt;
}

template <class T>
T resolve(const Flag<T>& flag, const json& config, std::initializer_list<const char*> keys,
          T fallback) {
  return lookup(flag, config, keys).value_or(fallback);
}

template <class T>
T require(const Flag<T>& flag, const json& config, std::initializer_list<const char*> keys,
          const std::string& name) {
  auto v = lookup(flag, config, keys);
  if (!v) throw ValidationError("missing required setting " + name);
  return *v;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json config;
  try {
    config = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  if (!config.is_object()) throw ParseError("config " + path + ": expected a JSON object");
  return config;
}

std::uint64_t resolve_seed(const Flag<std::uint64_t>& flag, const json& config,
                           std::initializer_list<const char*> keys) {
  if (const char* env = std::getenv("KDC_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      return v;
    } catch (const std::exception&) {
      throw ValidationError(std::string("KDC_SEED is not an unsigned integer: ") + env);
    }
  }
  return resolve(flag, config, keys, std::uint64_t{0});
}

io::MatrixFormat parse_format(const std::string& text) {
  if (text == "csv") return io::MatrixFormat::csv;
  if (text == "bin") return io::MatrixFormat::binary;
  throw ValidationError("--format must be csv or bin, got '" + text + "'");
}

void emit(std::ostream& out, const std::string& text) {
  out << text;
  out.flush();
  if (!out) throw io::WriteError("failed writing to standard output");
}

// Writes to `path`, or to `out` when the path is empty.
void deliver(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    emit(out, text);
  } else {
    io::write_file(path, text);
  }
}

void log_config(std::ostream& err, const std::string& command, const json& resolved) {
  err << "kdc " << command << ": config " << resolved.dump() << '\n';
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

// "a,b,c", "lo:hi" (unit step) or "lo:hi:step".
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> values;
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() < 2 || parts.size() > 3) throw ValidationError("bad range '" + text + "'");
    const double lo = to_double(parts[0]);
    const double hi = to_double(parts[1]);
    const double step = parts.size() == 3 ? to_double(parts[2]) : 1.0;
    if (!(step > 0.0) || hi < lo) throw ValidationError("bad range '" + text + "'");
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (long i = 0; i < count; ++i) values.push_back(lo + static_cast<double>(i) * step);
  } else {
    for (const auto& part : split(text, ',')) values.push_back(to_double(part));
  }
  if (values.empty()) throw ValidationError("empty grid '" + text + "'");
  return values;
}

std::vector<Index> to_sizes(const std::vector<double>& values) {
  std::vector<Index> out;
  for (double v : values) {
    if (v != std::floor(v)) throw ValidationError("r_hat grid values must be integers");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

// Cluster sizes for generate/predict. r_hat alone follows the sweep layout;
// k and r_hat together give k clusters of r_hat with the rest outliers; k
// alone splits n as evenly as possible.
std::vector<Index> layout_sizes(Index n, std::optional<Index> r_hat, std::optional<Index> k) {
  if (n < 1) throw ValidationError("n must be positive");
  if (r_hat && k) {
    if (*r_hat < 1 || *k < 1 || *r_hat * *k > n) {
      throw ValidationError("k * r_hat must lie in 1..n");
    }
    return std::vector<Index>(static_cast<std::size_t>(*k), *r_hat);
  }
  if (r_hat) return cluster_sizes(n, *r_hat);
  if (k) {
    if (*k < 1 || *k > n) throw ValidationError("k must lie in 1..n");
    std::vector<Index> sizes(static_cast<std::size_t>(*k), n / *k);
    for (Index i = 0; i < n % *k; ++i) sizes[static_cast<std::size_t>(i)] += 1;
    return sizes;
  }
  throw ValidationError("give --r-hat, --k, or both");
}

struct Common {
  std::string config_path;
  json config;
};

void add_config_flag(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config file (flags take precedence)");
}

// ---------------------------------------------------------------- generate

struct GenerateFlags {
  Common common;
  Flag<Index> n, r_hat, k;
  Flag<double> p, q;
  Flag<std::string> dist_within, dist_between, format, out, partition_out;
  Flag<std::uint64_t> seed;
};

void add_generate(CLI::App& app, GenerateFlags& f) {
  auto* sub = app.add_subcommand("generate", "sample a planted-cluster weight matrix");
  add_config_flag(sub, f.common);
  option(sub, "--n", f.n, "node count");
  option(sub, "--r-hat", f.r_hat, "minimum cluster size");
  option(sub, "--k", f.k, "number of clusters");
  option(sub, "--p", f.p, "within-cluster Bernoulli probability (default 1)");
  option(sub, "--q", f.q, "between-cluster Bernoulli probability (default 0)");
  option(sub, "--dist-within", f.dist_within, "within law, e.g. uniform:0.6:1 (overrides --p)");
  option(sub, "--dist-between", f.dist_between, "between law (overrides --q)");
  option(sub, "--seed", f.seed, "RNG seed (KDC_SEED overrides)");
  option(sub, "--format", f.format, "matrix format: csv or bin");
  option(sub, "--out", f.out, "matrix path (default graph.csv / graph.bin)");
  option(sub, "--partition-out", f.partition_out, "ground-truth partition JSON path");
}

int do_generate(const GenerateFlags& f, std::ostream& /*out*/, std::ostream& err) {
  const json& cfg = f.common.config;
  const Index n = require(f.n, cfg, {"n"}, "--n");
  const auto r_hat = lookup(f.r_hat, cfg, {"r_hat"});
  const auto k = lookup(f.k, cfg, {"k"});
  const double p = resolve(f.p, cfg, {"p", "within_p"}, 1.0);
  const double q = resolve(f.q, cfg, {"q"}, 0.0);
  const auto within_text = lookup(f.dist_within, cfg, {"dist_within"});
  const auto between_text = lookup(f.dist_between, cfg, {"dist_between"});
  const std::uint64_t seed = resolve_seed(f.seed, cfg, {"seed"});

  std::string out_path = resolve(f.out, cfg, {"out"}, std::string());
  io::MatrixFormat format = io::MatrixFormat::csv;
  if (auto text = lookup(f.format, cfg, {"format"})) {
    format = parse_format(*text);
  } else if (!out_path.empty()) {
    format = io::format_from_path(out_path);
  }
  if (out_path.empty()) out_path = format == io::MatrixFormat::binary ? "graph.bin" : "graph.csv";
  std::string partition_path = resolve(f.partition_out, cfg, {"partition_out"}, std::string());
  if (partition_path.empty()) {
    partition_path = fs::path(out_path).replace_extension(".partition.json").string();
  }

  PlantedModelSpec spec;
  spec.partition = Partition::from_sizes(layout_sizes(n, r_hat, k), n);
  spec.within = within_text ? EdgeDistribution::parse(*within_text) : EdgeDistribution::bernoulli(p);
  spec.between =
      between_text ? EdgeDistribution::parse(*between_text) : EdgeDistribution::bernoulli(q);
  spec.seed = seed;
  spec.validate();

  json resolved = {{"command", "generate"},
                   {"n", n},
                   {"k", spec.partition.k()},
                   {"r_hat", spec.partition.r_hat()},
                   {"r_out", spec.partition.r_out()},
                   {"dist_within", spec.within.to_string()},
                   {"dist_between", spec.between.to_string()},
                   {"dist_cluster_outlier", spec.resolved_cluster_outlier().to_string()},
                   {"alpha", spec.alpha()},
                   {"beta", spec.beta()},
                   {"seed", seed},
                   {"format", format == io::MatrixFormat::binary ? "bin" : "csv"},
                   {"out", out_path},
                   {"partition_out", partition_path}};
  log_config(err, "generate", resolved);

  const WeightMatrix w = sample_weight_matrix(spec);
  io::write_matrix(out_path, w.matrix(), format);
  json partition = io::partition_to_json(spec.partition);
  partition["n"] = n;
  partition["config"] = resolved;
  io::write_file(partition_path, partition.dump(2) + "\n");
  err << "kdc generate: wrote " << out_path << " and " << partition_path << '\n';
  return kOk;
}

// ------------------------------------------------------------------- solve

struct SolveFlags {
  Common common;
  Flag<std::string> matrix, truth, out, diagnostics, report, format;
  Flag<Index> k;
  Flag<double> rho, tol, tau;
  Flag<int> max_iters;
};

void add_solve(CLI::App& app, SolveFlags& f) {
  auto* sub = app.add_subcommand("solve", "solve the SDP relaxation with ADMM");
  add_config_flag(sub, f.common);
  option(sub, "--matrix", f.matrix, "weight matrix (CSV, or binary with .bin extension)");
  option(sub, "--k", f.k, "number of clusters (default: from --truth)");
  option(sub, "--truth", f.truth, "ground-truth partition JSON for the recovery test");
  option(sub, "--rho", f.rho, "ADMM penalty (default min{max{5n/k,80},500}/2)");
  option(sub, "--tol", f.tol, "relative stopping tolerance (default 1e-4)");
  option(sub, "--max-iters", f.max_iters, "iteration cap (default 100)");
  option(sub, "--tau", f.tau, "partition extraction threshold (default 1/(2n))");
  option(sub, "--out", f.out, "path for the solution matrix Y");
  option(sub, "--format", f.format, "format of --out: csv or bin");
  option(sub, "--diagnostics", f.diagnostics, "per-iteration CSV path");
  option(sub, "--report", f.report, "JSON report path (default standard output)");
}

int do_solve(const SolveFlags& f, std::ostream& out, std::ostream& err) {
  const json& cfg = f.common.config;
  const std::string matrix_path = require(f.matrix, cfg, {"matrix"}, "--matrix");
  const auto truth_path = lookup(f.truth, cfg, {"truth"});
  const WeightMatrix w = io::read_weight_matrix(matrix_path);
  std::optional<Partition> truth;
  if (truth_path) {
    truth = io::read_partition(*truth_path);
    if (truth->n() != w.n()) {
      throw DimensionError("truth partition has " + std::to_string(truth->n()) +
                           " nodes, matrix has " + std::to_string(w.n()));
    }
  }
  auto k = lookup(f.k, cfg, {"k"});
  if (!k && truth) k = truth->k();
  if (!k) throw ValidationError("missing required setting --k (or --truth)");

  AdmmParams params;
  params.rho = lookup(f.rho, cfg, {"rho"});
  params.tol = resolve(f.tol, cfg, {"tol"}, params.tol);
  params.max_iters = resolve(f.max_iters, cfg, {"max_iters"}, params.max_iters);
  params.validate();
  const double tau = resolve(f.tau, cfg, {"tau"}, 0.0);
  const std::string out_path = resolve(f.out, cfg, {"out"}, std::string());
  const std::string diag_path = resolve(f.diagnostics, cfg, {"diagnostics"}, std::string());
  const std::string report_path = resolve(f.report, cfg, {"report"}, std::string());
  io::MatrixFormat format = out_path.empty() ? io::MatrixFormat::csv : io::format_from_path(out_path);
  if (auto text = lookup(f.format, cfg, {"format"})) format = parse_format(*text);

  json resolved = {{"command", "solve"},
                   {"matrix", matrix_path},
                   {"n", w.n()},
                   {"k", *k},
                   {"rho", params.resolved_rho(w.n(), *k)},
                   {"tol", params.tol},
                   {"max_iters", params.max_iters},
                   {"tau", tau > 0.0 ? tau : 1.0 / (2.0 * static_cast<double>(w.n()))},
                   {"truth", truth_path.value_or("")},
                   {"out", out_path},
                   {"diagnostics", diag_path}};
  log_config(err, "solve", resolved);

  std::ostringstream diag;
  diag << std::setprecision(17) << "iter,objective,primal_residual,dual_residual\n";
  const SdpSolution sol = admm_solve(w, *k, params, [&](const IterationRecord& r) {
    diag << r.iter << ',' << r.objective << ',' << r.primal_residual << ','
         << r.dual_residual << '\n';
  });
  err << "kdc solve: " << to_string(sol.status) << " after " << sol.iters << " iterations\n";

  json report = {{"config", resolved},
                 {"status", to_string(sol.status)},
                 {"iters", sol.iters},
                 {"objective", sol.objective},
                 {"primal_residual", sol.primal_residual},
                 {"dual_residual", sol.dual_residual},
                 {"rho", sol.rho}};
  const Partition found = extract_partition(sol.y, tau);
  report["partition"] = io::partition_to_json(found);
  if (truth) {
    const Matrix x0 = build_ideal_solution(*truth);
    const double err_value = relative_error(sol.y, x0);
    report["truth"] = {{"rel_err", err_value},
                       {"recovered", err_value < kRecoveryThreshold},
                       {"partition_match", found.same_as(*truth)},
                       {"ideal_objective", w.matrix().cwiseProduct(x0).sum()}};
  }

  if (!out_path.empty()) io::write_matrix(out_path, sol.y, format);
  if (!diag_path.empty()) io::write_file(diag_path, diag.str());
  deliver(report_path, report.dump(2) + "\n", out);
  return kOk;
}

// ----------------------------------------------------------------- certify

struct CertifyFlags {
  Common common;
  Flag<std::string> matrix, partition, x, out;
  Flag<double> alpha, beta, mu, tol;
  bool validate_only = false;
};

void add_certify(CLI::App& app, CertifyFlags& f) {
  auto* sub = app.add_subcommand("certify", "build and check the dual certificate");
  add_config_flag(sub, f.common);
  option(sub, "--matrix", f.matrix, "weight matrix");
  option(sub, "--partition", f.partition, "candidate partition JSON");
  option(sub, "--alpha", f.alpha, "within-cluster mean");
  option(sub, "--beta", f.beta, "between-cluster mean");
  option(sub, "--mu", f.mu, "evaluate the certificate at this mu instead of the smallest valid one");
  option(sub, "--x", f.x, "primal matrix for the KKT check (default: ideal solution)");
  option(sub, "--tol", f.tol, "KKT tolerance (default 1e-8)");
  option(sub, "--out", f.out, "report path (default standard output)");
  sub->add_flag("--validate-only", f.validate_only, "only validate the inputs");
}

int do_certify(const CertifyFlags& f, std::ostream& out, std::ostream& err) {
  const json& cfg = f.common.config;
  const std::string matrix_path = require(f.matrix, cfg, {"matrix"}, "--matrix");
  const auto partition_path = lookup(f.partition, cfg, {"partition"});
  const std::string out_path = resolve(f.out, cfg, {"out"}, std::string());
  const bool validate_only = f.validate_only || cfg.value("validate_only", false);

  const WeightMatrix w = io::read_weight_matrix(matrix_path);
  std::optional<Partition> partition;
  if (partition_path) {
    partition = io::read_partition(*partition_path);
    if (partition->n() != w.n()) {
      throw DimensionError("partition has " + std::to_string(partition->n()) +
                           " nodes, matrix has " + std::to_string(w.n()));
    }
  }

  if (validate_only) {
    json resolved = {{"command", "certify"},
                     {"matrix", matrix_path},
                     {"partition", partition_path.value_or("")},
                     {"validate_only", true}};
    log_config(err, "certify", resolved);
    json report = {{"config", resolved}, {"valid", true}, {"n", w.n()}};
    if (partition) report["k"] = partition->k();
    deliver(out_path, report.dump(2) + "\n", out);
    return kOk;
  }

  if (!partition) throw ValidationError("missing required setting --partition");
  const double alpha = require(f.alpha, cfg, {"alpha"}, "--alpha");
  const double beta = require(f.beta, cfg, {"beta"}, "--beta");
  const auto mu = lookup(f.mu, cfg, {"mu"});
  const double tol = resolve(f.tol, cfg, {"tol", "kkt_tol"}, 1e-8);
  const auto x_path = lookup(f.x, cfg, {"x"});
  if (!(tol > 0.0)) throw ValidationError("--tol must be positive");
  if (mu && !(*mu >= 0.0)) throw ValidationError("--mu must be nonnegative");

  json resolved = {{"command", "certify"},
                   {"matrix", matrix_path},
                   {"partition", *partition_path},
                   {"alpha", alpha},
                   {"beta", beta},
                   {"mu", mu ? json(*mu) : json("smallest valid")},
                   {"x", x_path.value_or("ideal")},
                   {"tol", tol}};
  log_config(err, "certify", resolved);

  const DualCertificate cert = mu ? build_certificate(w, *partition, alpha, beta, *mu)
                                  : verify_certificate(w, *partition, alpha, beta);
  Matrix x = build_ideal_solution(*partition);
  if (x_path) {
    x = io::read_matrix(*x_path);
    if (x.rows() != w.n()) {
      throw DimensionError("--x has " + std::to_string(x.rows()) + " rows, matrix has " +
                           std::to_string(w.n()));
    }
  }
  const KktReport kkt = check_kkt(x, w, cert, tol);

  json report = {
      {"config", resolved},
      {"mu", cert.mu},
      {"mu_max", cert.mu_max},
      {"s_tilde_norm", cert.s_tilde_norm},
      {"lambda_min_entry", cert.lambda_min_entry},
      {"xi_min_entry", cert.xi_min_entry},
      {"flags",
       {{"lambda_nonneg", cert.flags.lambda_nonneg},
        {"xi_nonneg", cert.flags.xi_nonneg},
        {"s_tilde_bound", cert.flags.s_tilde_bound},
        {"block_weights", cert.flags.block_weights}}},
      {"kkt",
       {{"stationarity", kkt.stationarity},
        {"lambda_nonneg", kkt.lambda_nonneg},
        {"xi_nonneg", kkt.xi_nonneg},
        {"rowsum", kkt.rowsum},
        {"nonneg", kkt.nonneg},
        {"sdp", kkt.sdp},
        {"all_passed", kkt.all_passed()},
        {"primal_feasible", kkt.primal_feasible},
        {"stationarity_error", kkt.stationarity_error},
        {"rowsum_slack", kkt.rowsum_slack},
        {"nonneg_slack", kkt.nonneg_slack},
        {"sdp_slack", kkt.sdp_slack},
        {"s_min_eigenvalue", kkt.s_min_eigenvalue}}},
      {"lambda", vector_to_json(cert.lambda)},
      {"verdict", to_string(cert.verdict)}};
  err << "kdc certify: " << to_string(cert.verdict) << '\n';
  deliver(out_path, report.dump(2) + "\n", out);
  return kOk;
}

// ----------------------------------------------------------------- predict

struct ConstantFlags {
  Flag<double> c1, c2, c3, c4, c5, c_unique, big_c, big_c_prime;
};

void add_constant_flags(CLI::App* sub, ConstantFlags& c) {
  option(sub, "--c1", c.c1, "noise-term constant");
  option(sub, "--c2", c.c2, "cluster-term constant");
  option(sub, "--c3", c.c3, "outlier-term constant");
  option(sub, "--c4", c.c4, "outlier-mass constant");
  option(sub, "--c5", c.c5, "gap constant");
  option(sub, "--c-unique", c.c_unique, "uniqueness constant (default 12)");
  option(sub, "--big-c", c.big_c, "S~ bound constant C");
  option(sub, "--big-c-prime", c.big_c_prime, "S~ bound constant C'");
}

bounds::TheoryConstants resolve_constants(const ConstantFlags& f, const json& cfg) {
  const json block = cfg.contains("constants") ? cfg.at("constants") : json::object();
  bounds::TheoryConstants c;
  c.c1 = resolve(f.c1, block, {"c1"}, c.c1);
  c.c2 = resolve(f.c2, block, {"c2"}, c.c2);
  c.c3 = resolve(f.c3, block, {"c3"}, c.c3);
  c.c4 = resolve(f.c4, block, {"c4"}, c.c4);
  c.c5 = resolve(f.c5, block, {"c5"}, c.c5);
  c.c_unique = resolve(f.c_unique, block, {"c_unique"}, c.c_unique);
  c.big_c = resolve(f.big_c, block, {"C", "big_c"}, c.big_c);
  c.big_c_prime = resolve(f.big_c_prime, block, {"C_prime", "big_c_prime"}, c.big_c_prime);
  c.validate();
  return c;
}

json constants_to_json(const bounds::TheoryConstants& c) {
  return {{"c1", c.c1}, {"c2", c.c2}, {"c3", c.c3}, {"c4", c.c4}, {"c5", c.c5},
          {"c_unique", c.c_unique}, {"C", c.big_c}, {"C_prime", c.big_c_prime}};
}

struct PredictFlags {
  Common common;
  Flag<Index> n, r_hat, k;
  Flag<double> p, q;
  ConstantFlags constants;
};

void add_predict(CLI::App& app, PredictFlags& f) {
  auto* sub = app.add_subcommand("predict", "evaluate the recovery thresholds");
  add_config_flag(sub, f.common);
  option(sub, "--n", f.n, "node count");
  option(sub, "--p", f.p, "within-cluster Bernoulli probability (default 1)");
  option(sub, "--q", f.q, "between-cluster Bernoulli probability (default 0)");
  option(sub, "--r-hat", f.r_hat, "minimum cluster size for the size-dependent conditions");
  option(sub, "--k", f.k, "number of clusters");
  add_constant_flags(sub, f.constants);
}

// Smallest r_hat, using the sweep layout, at which the recovery condition holds.
std::optional<Index> smallest_recoverable(Index n, double p, double q,
                                          const bounds::TheoryConstants& c) {
  const double sigma1 = std::sqrt(p * (1.0 - p));
  const double sigma2 = std::sqrt(q * (1.0 - q));
  for (Index r = 1; r <= n; ++r) {
    const auto sizes = cluster_sizes(n, r);
    const Index r_tilde = *std::max_element(sizes.begin(), sizes.end());
    if (bounds::recovery_condition(p - q, static_cast<double>(r), static_cast<double>(r_tilde),
                                   static_cast<double>(n), static_cast<double>(sizes.size()), 0,
                                   sigma1, sigma2, q, c)) {
      return r;
    }
  }
  return std::nullopt;
}

int do_predict(const PredictFlags& f, std::ostream& out, std::ostream& err) {
  const json& cfg = f.common.config;
  const Index n = require(f.n, cfg, {"n"}, "--n");
  const double p = resolve(f.p, cfg, {"p", "within_p"}, 1.0);
  const double q = resolve(f.q, cfg, {"q"}, 0.0);
  const auto r_hat = lookup(f.r_hat, cfg, {"r_hat"});
  const auto k = lookup(f.k, cfg, {"k"});
  const bounds::TheoryConstants c = resolve_constants(f.constants, cfg);
  if (n < 2) throw ValidationError("--n must be at least 2");
  if (!(p >= 0.0 && p <= 1.0) || !(q >= 0.0 && q <= 1.0)) {
    throw ValidationError("--p and --q must lie in [0,1]");
  }
  if (!(p > q)) throw GapError("gap p - q must be positive");

  const double sigma1_sq = p * (1.0 - p);
  const double sigma2_sq = q * (1.0 - q);
  const double sigma_tilde_sq = std::max(sigma1_sq, sigma2_sq);
  const double nd = static_cast<double>(n);

  json resolved = {{"command", "predict"}, {"n", n}, {"p", p}, {"q", q},
                   {"r_hat", r_hat ? json(*r_hat) : json(nullptr)},
                   {"k", k ? json(*k) : json(nullptr)}, {"constants", constants_to_json(c)}};
  log_config(err, "predict", resolved);

  std::ostringstream table;
  table << std::setprecision(10);
  table << "# kdc predict " << resolved.dump() << '\n';
  auto row = [&](const std::string& name, const auto& value) {
    table << std::left << std::setw(26) << name << value << '\n';
  };
  row("gamma", p - q);
  row("sigma1_sq", sigma1_sq);
  row("sigma2_sq", sigma2_sq);
  row("phase_curve_r_hat", bounds::phase_curve(nd, q));
  row("bernstein_threshold_n", bounds::bernstein_threshold(nd, sigma_tilde_sq, nd));
  const auto smallest = smallest_recoverable(n, p, q, c);
  row("smallest_r_hat_recovery", smallest ? std::to_string(*smallest) : std::string("none"));

  if (r_hat || k) {
    const auto sizes = layout_sizes(n, r_hat, k);
    const Partition part = Partition::from_sizes(sizes, n);
    const double rh = static_cast<double>(part.r_hat());
    const double rt = static_cast<double>(part.r_tilde());
    const double kk = static_cast<double>(part.k());
    const double ro = static_cast<double>(part.r_out());
    const double s1 = std::sqrt(sigma1_sq);
    const double s2 = std::sqrt(sigma2_sq);
    const auto terms = bounds::recovery_terms(rh, rt, nd, kk, ro, s1, s2, q, c);
    row("layout_k", part.k());
    row("layout_r_hat", part.r_hat());
    row("layout_r_tilde", part.r_tilde());
    row("layout_r_out", part.r_out());
    row("gap_condition", bounds::gap_condition(p, q, sigma_tilde_sq, rh, nd, c) ? "true" : "false");
    row("uniqueness_bound", bounds::uniqueness_bound(sigma_tilde_sq, rh, nd, c.c_unique));
    row("uniqueness_holds",
        p - q > bounds::uniqueness_bound(sigma_tilde_sq, rh, nd, c.c_unique) ? "true" : "false");
    row("recovery_lhs", (p - q) * rh);
    row("recovery_rhs", terms.total());
    row("recovery_condition", (p - q) * rh >= terms.total() ? "true" : "false");
    row("s_tilde_norm_bound",
        bounds::s_tilde_norm_bound(s1, s2, nd, rt, rh, kk, ro, q, c.big_c, c.big_c_prime));
  }
  emit(out, table.str());
  return kOk;
}

// ------------------------------------------------------------------- sweep

struct SweepFlags {
  Common common;
  Flag<Index> n;
  Flag<double> p, rho, tol;
  Flag<std::string> r_hat_grid, q_grid, out;
  Flag<int> trials, max_iters;
  Flag<unsigned> jobs;
  Flag<std::uint64_t> seed;
};

void add_sweep(CLI::App& app, SweepFlags& f) {
  auto* sub = app.add_subcommand("sweep", "run a recovery-rate sweep over (r_hat, q)");
  add_config_flag(sub, f.common);
  option(sub, "--n", f.n, "node count");
  option(sub, "--p", f.p, "within-cluster Bernoulli probability (default 1)");
  option(sub, "--r-hat-grid", f.r_hat_grid, "list 'a,b,c' or range 'lo:hi[:step]'");
  option(sub, "--q-grid", f.q_grid, "list, range, or 'sparse' for {0, 0.25 log n/n, ..., 5 log n/n}");
  option(sub, "--trials", f.trials, "trials per cell (default 5)");
  option(sub, "--seed", f.seed, "base seed (KDC_SEED overrides)");
  option(sub, "--rho", f.rho, "ADMM penalty");
  option(sub, "--tol", f.tol, "ADMM tolerance");
  option(sub, "--max-iters", f.max_iters, "ADMM iteration cap");
  option(sub, "--jobs", f.jobs, "worker threads (default: all cores)");
  option(sub, "--out", f.out, "CSV path (default standard output)");
}

std::vector<double> grid_from(const std::optional<std::string>& flag, const json& cfg,
                              const char* key, Index n, bool allow_sparse) {
  if (flag) {
    if (allow_sparse && *flag == "sparse") return sparse_q_grid(n);
    return parse_grid(*flag);
  }
  if (!cfg.contains(key)) throw ValidationError(std::string("missing required setting ") + key);
  const json& v = cfg.at(key);
  if (v.is_string()) {
    if (allow_sparse && v.get<std::string>() == "sparse") return sparse_q_grid(n);
    return parse_grid(v.get<std::string>());
  }
  return v.get<std::vector<double>>();
}

int do_sweep(const SweepFlags& f, std::ostream& out, std::ostream& err) {
  const json& cfg = f.common.config;
  const json solver_cfg = cfg.contains("solver") ? cfg.at("solver") : json::object();
  SweepSpec spec;
  spec.n = require(f.n, cfg, {"n"}, "--n");
  spec.within_p = resolve(f.p, cfg, {"within_p", "p"}, 1.0);
  spec.r_hat_grid = to_sizes(grid_from(f.r_hat_grid.given() ? std::optional(f.r_hat_grid.value)
                                                            : std::nullopt,
                                       cfg, "r_hat_grid", spec.n, false));
  spec.q_grid = grid_from(f.q_grid.given() ? std::optional(f.q_grid.value) : std::nullopt, cfg,
                          "q_grid", spec.n, true);
  spec.trials = resolve(f.trials, cfg, {"trials"}, 5);
  spec.base_seed = resolve_seed(f.seed, cfg, {"base_seed", "seed"});
  spec.solver.rho = f.rho.given() ? std::optional(f.rho.value)
                                  : lookup(Flag<double>{}, solver_cfg, {"rho"});
  if (!spec.solver.rho) spec.solver.rho = lookup(Flag<double>{}, cfg, {"rho"});
  spec.solver.tol = resolve(f.tol, solver_cfg, {"tol"}, cfg.value("tol", spec.solver.tol));
  spec.solver.max_iters =
      resolve(f.max_iters, solver_cfg, {"max_iters"}, cfg.value("max_iters", spec.solver.max_iters));
  const unsigned jobs = resolve(f.jobs, cfg, {"jobs"}, 0u);
  const std::string out_path = resolve(f.out, cfg, {"out"}, std::string());
  spec.validate();

  json solver = {{"tol", spec.solver.tol}, {"max_iters", spec.solver.max_iters}};
  solver["rho"] = spec.solver.rho ? json(*spec.solver.rho) : json("default");
  json resolved = {{"command", "sweep"},      {"n", spec.n},
                   {"within_p", spec.within_p}, {"r_hat_grid", spec.r_hat_grid},
                   {"q_grid", spec.q_grid},   {"trials", spec.trials},
                   {"base_seed", spec.base_seed}, {"solver", solver},
                   {"jobs", jobs},            {"out", out_path}};
  log_config(err, "sweep", resolved);

  std::size_t last_pct = 101;
  const SweepResult result = run_sweep(spec, jobs, [&](std::size_t done, std::size_t total) {
    const std::size_t pct = 100 * done / total;
    if (pct / 10 != last_pct / 10 || done == total) {
      err << "kdc sweep: " << done << "/" << total << " trials\n";
      last_pct = pct;
    }
  });
  deliver(out_path, sweep_to_csv(result), out);
  if (!out_path.empty()) {
    // The CSV layout is fixed, so the resolved configuration goes next to it.
    io::write_file(out_path + ".config.json", resolved.dump(2) + "\n");
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Densest k-disjoint-clique clustering via an ADMM-solved SDP relaxation", "kdc"};
  app.require_subcommand(1);
  GenerateFlags generate;
  SolveFlags solve;
  CertifyFlags certify;
  PredictFlags predict;
  SweepFlags sweep;
  add_generate(app, generate);
  add_solve(app, solve);
  add_certify(app, certify);
  add_predict(app, predict);
  add_sweep(app, sweep);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kValidation;
  }

  try {
    if (app.got_subcommand("generate")) {
      generate.common.config = load_config(generate.common.config_path);
      return do_generate(generate, out, err);
    }
    if (app.got_subcommand("solve")) {
      solve.common.config = load_config(solve.common.config_path);
      return do_solve(solve, out, err);
    }
    if (app.got_subcommand("certify")) {
      certify.common.config = load_config(certify.common.config_path);
      return do_certify(certify, out, err);
    }
    if (app.got_subcommand("predict")) {
      predict.common.config = load_config(predict.common.config_path);
      return do_predict(predict, out, err);
    }
    sweep.common.config = load_config(sweep.common.config_path);
    return do_sweep(sweep, out, err);
  } catch (const GapError& e) {
    err << "kdc: gap error: " << e.what() << '\n';
    return kGap;
  } catch (const DimensionError& e) {
    err << "kdc: dimension mismatch: " << e.what() << '\n';
    return kDimension;
  } catch (const ValidationError& e) {
    err << "kdc: invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    err << "kdc: parse error: " << e.what() << '\n';
    return kParse;
  } catch (const nlohmann::json::exception& e) {
    err << "kdc: parse error: " << e.what() << '\n';
    return kParse;
  } catch (const io::WriteError& e) {
    err << "kdc: write error: " << e.what() << '\n';
    return kWrite;
  } catch (const NumericalError& e) {
    err << "kdc: numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "kdc: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace kdc::cli
