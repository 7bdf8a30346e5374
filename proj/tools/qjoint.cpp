#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qjoint/qjoint.hpp"

namespace {

using qjoint::json_io::Json;

constexpr int exit_pass = 0;
constexpr int exit_usage = 1;
constexpr int exit_failure = 2;
constexpr double golden_defect = 0.25;
constexpr double golden_tier = 1e-4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &length) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream out;
  for (unsigned int k = 0; k < length; ++k) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return out.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Options {
  std::string input;
  std::string output;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::size_t restarts = 64;
  Eigen::Index dim = 8;
  std::size_t n = 4;
  std::vector<Eigen::Index> ranks;
  std::string properties = "all";
  std::size_t iterations = 1000;
  bool json = false;
};

class Run {
 public:
  Run(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {
    start_ = std::chrono::steady_clock::now();
    started_at_ = utc_now();
  }

  /// Reads an input file and records its hash.
  std::string read_input(const std::string& path) {
    std::string bytes;
    try {
      bytes = qjoint::json_io::read_file(path);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
    inputs_.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
    return bytes;
  }

  Json read_json(const std::string& path) {
    Json j = qjoint::json_io::parse(read_input(path));
    if (j.is_object() && j.contains("result") && j.at("result").is_object() && j.at("result").contains("instance"))
      return j.at("result").at("instance");
    return j;
  }

  void set_config(Json config) { config_ = std::move(config); }

  int finish(Json result, bool passed, const std::string& summary) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json manifest{{"command", command_},
                  {"config", config_},
                  {"inputs", inputs_},
                  {"version", qjoint::version},
                  {"seed", opt_.seed},
                  {"started_at", started_at_},
                  {"wall_time_seconds", wall}};
    const Json doc{{"manifest", manifest}, {"passed", passed}, {"result", std::move(result)}};
    const std::string text = doc.dump(2) + "\n";
    if (!opt_.output.empty()) {
      std::ofstream out(opt_.output, std::ios::binary);
      if (!out || !(out << text)) throw UsageError("cannot write '" + opt_.output + "'");
    }
    if (opt_.json)
      std::cout << text;
    else
      std::cout << summary << (passed ? "PASS" : "FAIL") << "\n";
    return passed ? exit_pass : exit_failure;
  }

 private:
  std::string command_;
  const Options& opt_;
  std::chrono::steady_clock::time_point start_;
  std::string started_at_;
  Json config_ = Json::object();
  Json inputs_ = Json::array();
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

int cmd_verify_appendix(const Options& opt) {
  Run run("verify-appendix", opt);
  const double tolerance = opt.tol.value_or(qjoint::tol::golden);
  run.set_config({{"tol", tolerance}, {"input", opt.input.empty() ? Json(nullptr) : Json(opt.input)}});
  const bool bundled = opt.input.empty();
  const qjoint::CounterexampleInstance inst =
      bundled ? qjoint::load_appendix_instance() : qjoint::json_io::instance_from(run.read_json(opt.input));
  const qjoint::InstanceReport report = qjoint::verify_instance(inst, tolerance);

  bool passed = report.projectors_ok && report.state_ok && report.pairwise_ok;
  std::string reason;
  if (!report.projectors_ok) reason += "projector residual above tolerance; ";
  if (!report.state_ok) reason += "state norm off by more than tolerance; ";
  if (!report.pairwise_ok) reason += "pairwise defect above tolerance; ";
  if (report.block_swap_defect <= 10.0 * tolerance) {
    passed = false;
    reason += "defect below threshold; ";
  }
  if (bundled && std::abs(report.block_swap_defect - golden_defect) > golden_tier) {
    passed = false;
    reason += "defect differs from 0.25; ";
  }
  Json result = qjoint::json_io::to_json(report);
  result["defect"] = report.block_swap_defect;
  result["golden_defect"] = bundled ? Json(golden_defect) : Json(nullptr);
  result["reason"] = reason;

  std::ostringstream s;
  s << "idempotence residual   " << fmt(report.idempotence_residual) << "\n"
    << "hermiticity residual   " << fmt(report.hermiticity_residual) << "\n"
    << "state norm             " << fmt(report.state_norm) << "\n"
    << "worst pairwise defect  " << fmt(report.worst_pairwise_defect) << "\n"
    << "block-swap defect      " << fmt(report.block_swap_defect) << "\n"
    << "worst defect over S_n  " << fmt(report.worst_sigma.defect) << "\n";
  if (!reason.empty()) s << "reason: " << reason << "\n";
  return run.finish(std::move(result), passed, s.str());
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int cmd_check(const Options& opt) {
  if (opt.input.empty()) throw UsageError("check needs --input");
  Run run("check", opt);
  qjoint::AnalysisOptions options;
  options.check.tolerance = opt.tol.value_or(qjoint::tol::check);
  options.check.seed = opt.seed;
  options.check.require_prerequisites = false;
  options.check.prob_tolerance = std::max(qjoint::tol::probability, 100.0 * options.check.tolerance * options.check.tolerance);
  options.permutability_tolerance = options.check.tolerance;
  if (opt.properties != "all") options.properties = split_list(opt.properties);
  run.set_config({{"tol", options.check.tolerance},
                  {"prob_tolerance", options.check.prob_tolerance},
                  {"properties", options.properties},
                  {"input", opt.input}});

  const qjoint::json_io::FamilyInput input = qjoint::json_io::family_from(run.read_json(opt.input));
  qjoint::FamilyAnalysis analysis;
  try {
    analysis = qjoint::analyze_family(input.family, input.states, options);
  } catch (const qjoint::Error& e) {
    if (e.kind() == qjoint::ErrorKind::InvalidArgument) throw UsageError(e.what());
    throw;
  }
  std::ostringstream s;
  for (const qjoint::PropertyReport& r : analysis.reports) {
    s << std::left << std::setw(26) << r.property_name << std::setw(16) << r.status << fmt(r.worst_residual);
    if (!r.prerequisites_met) s << "  (marginals failed)";
    s << "\n";
    if (!r.witnesses.empty()) {
      const qjoint::Witness& w = r.witnesses.front();
      s << "  witness " << w.kind << " state " << w.state.source << " blocks";
      for (const qjoint::IndexSet& b : w.index_sets) {
        s << " {";
        const auto idx = b.indices();
        for (std::size_t k = 0; k < idx.size(); ++k) s << (k ? "," : "") << idx[k] + 1;
        s << "}";
      }
      s << " residual " << fmt(w.residual) << "\n";
    }
  }
  if (analysis.joint_distribution) s << "joint distribution: " << (*analysis.joint_distribution ? "yes" : "no") << "\n";
  if (analysis.verdicts_agree) s << "permutability verdict agrees: " << (*analysis.verdicts_agree ? "yes" : "no") << "\n";
  return run.finish(qjoint::json_io::to_json(analysis), analysis.passed, s.str());
}

int cmd_jordan(const Options& opt, bool repair) {
  if (opt.input.empty()) throw UsageError(std::string(repair ? "repair" : "jordan") + " needs --input");
  Run run(repair ? "repair" : "jordan", opt);
  qjoint::JordanOptions options;
  if (opt.tol) options.tolerance = *opt.tol;
  run.set_config({{"tol", options.tolerance}, {"input", opt.input}});
  const qjoint::json_io::ProjectorPair pair = qjoint::json_io::projector_pair_from(run.read_json(opt.input));
  std::ostringstream s;
  if (!repair) {
    const qjoint::JordanDecomposition jd = qjoint::jordan_decompose(pair.p1, pair.p2, options);
    s << "one-dimensional blocks " << jd.one_dim_blocks.size() << "\n";
    for (const qjoint::TwoDimBlock& b : jd.two_dim_blocks) s << "two-dimensional block theta " << fmt(b.theta) << "\n";
    const double residual = std::max({jd.orthonormality_residual(), (jd.reconstruct_p1() - pair.p1).norm(),
                                      (jd.reconstruct_p2() - pair.p2).norm()});
    s << "reconstruction residual " << fmt(residual) << "\n";
    Json result = qjoint::json_io::to_json(jd);
    result["reconstruction_residual"] = residual;
    return run.finish(std::move(result), residual <= 1e-8 * std::max<double>(1.0, double(jd.dim)), s.str());
  }
  if (!pair.state) throw UsageError("repair needs a \"state\" in the input");
  const qjoint::RepairResult r = qjoint::repair_projector(pair.p1, pair.p2, *pair.state, options);
  const double d = static_cast<double>(pair.p1.rows());
  const bool passed = r.commutator_norm <= d * 1e-9 && r.projector_residual <= 1e-9 &&
                      r.on_state_distance <= r.bound() + 1e-9;
  s << "epsilon            " << fmt(r.epsilon) << "\n"
    << "on-state distance  " << fmt(r.on_state_distance) << "\n"
    << "sqrt(2) epsilon    " << fmt(r.bound()) << "\n"
    << "margin             " << fmt(r.bound() - r.on_state_distance) << "\n"
    << "commutator norm    " << fmt(r.commutator_norm) << "\n";
  return run.finish(qjoint::json_io::to_json(r), passed, s.str());
}

int cmd_search(const Options& opt) {
  if (opt.restarts == 0) throw UsageError("--restarts must be positive");
  Run run("search", opt);
  qjoint::SearchConfig config;
  config.dim = opt.dim;
  config.n_projectors = opt.n;
  config.ranks = opt.ranks.empty() ? qjoint::SearchConfig::default_ranks(opt.dim, opt.n) : opt.ranks;
  config.seed = opt.seed;
  config.restarts = opt.restarts;
  config.max_iterations = opt.iterations;
  if (opt.tol) config.constraint_tol = *opt.tol;
  try {
    config.validate();
  } catch (const qjoint::Error& e) {
    throw UsageError(e.what());
  }
  run.set_config({{"dim", config.dim},
                  {"n", config.n_projectors},
                  {"ranks", config.ranks},
                  {"restarts", config.restarts},
                  {"iterations", config.max_iterations},
                  {"constraint_tol", config.constraint_tol}});
  const qjoint::SearchResult result = qjoint::search_best(config);
  std::ostringstream s;
  s << "objective          " << fmt(result.objective) << "\n"
    << "constraint residual " << fmt(result.worst_constraint_residual) << "\n"
    << "restart            " << result.restart << " (seed " << result.seed_used << ")\n";
  if (!result.is_counterexample) s << "NoFeasiblePointFound: no restart met the constraints with a positive defect\n";
  Json j = qjoint::json_io::to_json(result);
  if (!result.is_counterexample) j["error"] = std::string(qjoint::to_string(qjoint::ErrorKind::NoFeasiblePointFound));
  return run.finish(std::move(j), result.is_counterexample, s.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint distributions of sequential quantum measurements"};
  app.require_subcommand(1);
  Options opt;
  std::string ranks;

  const auto common = [&](CLI::App* cmd) {
    cmd->add_option("--output", opt.output, "Write the JSON document to this file");
    cmd->add_option("--tol", opt.tol, "Tolerance");
    cmd->add_flag("--json", opt.json, "Print the JSON document");
  };
  CLI::App* verify = app.add_subcommand("verify-appendix", "Verify the bundled four-projector instance");
  verify->add_option("--input", opt.input, "Instance file instead of the bundled one");
  common(verify);
  CLI::App* check = app.add_subcommand("check", "Check the distribution properties of a family");
  check->add_option("--input", opt.input, "Family or instance file")->required();
  check->add_option("--properties", opt.properties, "Comma-separated properties, or 'all'");
  check->add_option("--seed", opt.seed, "Seed for the linearity spot checks");
  common(check);
  CLI::App* jordan = app.add_subcommand("jordan", "Block decomposition of two projectors");
  jordan->add_option("--input", opt.input, "File with p1 and p2")->required();
  common(jordan);
  CLI::App* repair = app.add_subcommand("repair", "Commuting repair of the second projector");
  repair->add_option("--input", opt.input, "File with p1, p2 and state")->required();
  common(repair);
  CLI::App* search = app.add_subcommand("search", "Penalty search for new instances");
  search->add_option("--seed", opt.seed, "Base seed");
  search->add_option("--restarts", opt.restarts, "Number of restarts");
  search->add_option("--dim", opt.dim, "Hilbert space dimension");
  search->add_option("--n", opt.n, "Number of projectors");
  search->add_option("--ranks", ranks, "Comma-separated projector ranks");
  search->add_option("--iterations", opt.iterations, "Optimizer iterations per penalty stage");
  common(search);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (!ranks.empty()) {
      for (const std::string& r : split_list(ranks)) {
        try {
          opt.ranks.push_back(std::stol(r));
        } catch (const std::exception&) {
          throw UsageError("bad rank '" + r + "'");
        }
      }
    }
    if (opt.tol && !(*opt.tol >= 0.0)) throw UsageError("--tol must be non-negative");
    if (verify->parsed()) return cmd_verify_appendix(opt);
    if (check->parsed()) return cmd_check(opt);
    if (jordan->parsed()) return cmd_jordan(opt, false);
    if (repair->parsed()) return cmd_jordan(opt, true);
    if (search->parsed()) return cmd_search(opt);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const qjoint::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case qjoint::ErrorKind::ParseError:
      case qjoint::ErrorKind::DimensionMismatch:
      case qjoint::ErrorKind::InvalidArgument:
        return exit_usage;
      default:
        return exit_failure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}
