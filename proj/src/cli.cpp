#include "cat/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cat/analysis.hpp"
#include "cat/harness.hpp"
#include "cat/http_server.hpp"
#include "cat/session_service.hpp"

namespace cat::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kStrategyNames = {"sequential", "binary", "doubling", "fun", "frustrating"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int run_session(StrategyKind kind, std::int64_t n, std::istream& in, std::ostream& out, std::ostream& err) {
  auto session = SearchSession::start(kind, n);
  std::string line;
  while (!session.done()) {
    const Level level = session.next_probe();
    out << "PROBE " << level << '\n' << std::flush;
    while (true) {
      if (!std::getline(in, line)) {
        err << "input ended before the search finished\n";
        return kExitIo;
      }
      const auto word = trim(line);
      if (word == "quit") return kExitOk;
      if (word == "pass" || word == "fail") {
        session.observe(word == "pass" ? Outcome::Pass : Outcome::Fail);
        break;
      }
      err << "expected pass, fail or quit\n";
    }
  }
  const auto phi = measure(session.trace());
  out << "RESULT " << session.result() << " NEGATIVES " << phi.negatives << " TOTAL " << phi.total << '\n';
  return kExitOk;
}

std::filesystem::path dominance_path_for(const std::filesystem::path& out) {
  auto path = out;
  path.replace_filename(out.stem().string() + "_dominance" + out.extension().string());
  return path;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive difficulty search: strategies, analysis harness and live sessions", "cat"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (CAT_SEED when absent)");

  std::string strategy_name;
  std::int64_t n = 0;
  std::string out_path;
  unsigned threads = 0;

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one strategy on every threshold p in [0..n] and write a CSV");
  sweep_cmd->add_option("--strategy", strategy_name)->required()->check(CLI::IsMember(kStrategyNames));
  sweep_cmd->add_option("--n", n)->required()->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", out_path)->required();
  sweep_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::vector<std::string> strategy_list = kStrategyNames;
  auto* compare_cmd = app.add_subcommand("compare", "Sweep several strategies and write their Pareto fronts");
  compare_cmd->add_option("--strategies", strategy_list)->delimiter(',')->check(CLI::IsMember(kStrategyNames));
  compare_cmd->add_option("--n", n)->required()->check(CLI::PositiveNumber);
  compare_cmd->add_option("--out", out_path)->required();

  std::int64_t n_max = 4096;
  auto* verify_cmd = app.add_subcommand("verify", "Check every strategy and analysis property exhaustively");
  verify_cmd->add_option("--n-max", n_max)->check(CLI::Range(std::int64_t{16}, std::int64_t{1} << 20));
  verify_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* session_cmd = app.add_subcommand("session", "Interactive line protocol: PROBE <level> / pass|fail|quit");
  session_cmd->add_option("--strategy", strategy_name)->required()->check(CLI::IsMember(kStrategyNames));
  session_cmd->add_option("--n", n)->required()->check(CLI::PositiveNumber);

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string log_path;
  std::string static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP session service");
  serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--log", log_path, "JSONL event log")->required();
  serve_cmd->add_option("--static-dir", static_dir, "Directory served at /");

  std::string profile_path;
  std::int64_t runs = 100;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo runs against a stochastic subject profile");
  simulate_cmd->add_option("--strategies", strategy_list)->delimiter(',')->check(CLI::IsMember(kStrategyNames));
  simulate_cmd->add_option("--profile", profile_path)->required();
  simulate_cmd->add_option("--runs", runs)->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (seed_opt->count() == 0) {
      if (const char* env = std::getenv("CAT_SEED")) {
        try {
          std::size_t used = 0;
          seed = std::stoull(env, &used);
          if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
          throw UsageError(std::string("CAT_SEED is not an unsigned integer: '") + env + "'");
        }
      }
    }

    if (sweep_cmd->parsed()) {
      const auto rows = sweep(parse_strategy(strategy_name), n, threads);
      emit_csv(rows, out_path);
      out << "wrote " << rows.size() << " rows to " << out_path << '\n';
      return kExitOk;
    }
    if (compare_cmd->parsed()) {
      std::vector<StrategyKind> kinds;
      for (const auto& name : strategy_list) kinds.push_back(parse_strategy(name));
      std::vector<SweepRow> rows;
      for (StrategyKind kind : kinds) {
        const auto part = sweep(kind, n);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      emit_csv(rows, out_path);
      const auto dom_path = dominance_path_for(out_path);
      write_text_file(dom_path, format_dominance_csv(dominance_table(n, kinds)));
      out << "wrote " << rows.size() << " rows to " << out_path << " and the dominance table to "
          << dom_path.string() << '\n';
      return kExitOk;
    }
    if (verify_cmd->parsed()) {
      VerifyOptions options;
      options.seed = seed;
      options.threads = threads;
      const auto report = verify(n_max, options);
      out << report.to_text();
      return report.passed() ? kExitOk : kExitPropertyFailure;
    }
    if (session_cmd->parsed()) {
      return run_session(parse_strategy(strategy_name), n, in, out, err);
    }
    if (serve_cmd->parsed()) {
      service::SessionService svc(service::ServiceConfig{log_path, seed, {}});
      service::HttpServer server(svc, service::ServerConfig{host, port, static_dir});
      const int bound = server.bind();
      if (bound < 0) {
        err << "cannot bind " << host << ':' << port << '\n';
        return kExitIo;
      }
      out << "listening on http://" << host << ':' << bound << " (log " << log_path << ", "
          << svc.session_count() << " sessions restored)\n"
          << std::flush;
      server.listen();
      return kExitOk;
    }
    if (simulate_cmd->parsed()) {
      const auto profile = load_profile(profile_path);
      const auto* stochastic = std::get_if<StochasticProfile>(&profile);
      if (stochastic == nullptr) throw UsageError("simulate needs a stochastic profile {\"q\", \"t\", \"k\"}");
      std::vector<MonteCarloResult> results;
      for (const auto& name : strategy_list) {
        results.push_back(monte_carlo(parse_strategy(name), *stochastic, runs, seed));
        const auto& r = results.back();
        out << name << ": modal p " << r.modal_found_p() << ", mean negatives " << r.mean_negatives
            << ", mean total " << r.mean_total << '\n';
      }
      write_text_file(out_path, format_monte_carlo_csv(results));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const service::ReplayError& e) {
    err << "error: event log " << log_path << ": " << e.what() << '\n';
    return kExitIo;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace cat::cli
