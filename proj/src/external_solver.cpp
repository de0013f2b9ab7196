#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "leakrate/errors.hpp"
#include "leakrate/sdp.hpp"

namespace leakrate {

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

// Runs `<path> <input.dat-s> <output>` and reads SDPA-style output.
Solution solve_external(const ConicProblem& original_in, const SolverOptions& opts) {
  if (opts.external_path.empty()) throw ConfigError("external solver path is empty");
  const ConicProblem original = normalized(original_in);
  const ConicProblem p = with_inequalities_as_slack_block(original);

  static std::atomic<int> counter{0};
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       ("leakrate-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::create_directories(dir);
  const fs::path in = dir / "problem.dat-s";
  const fs::path out = dir / "result.out";
  {
    std::ofstream f(in);
    f << export_sdpa(p);
  }
  const std::string cmd = shell_quote(opts.external_path) + " " + shell_quote(in.string()) + " " +
                          shell_quote(out.string()) + " > " + shell_quote((dir / "log.txt").string()) + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream f(out);
  if (rc != 0 || !f) {
    Solution s;
    s.engine = "external";
    s.status = SolveStatus::Failed;
    s.diagnostic = "external solver exited with status " + std::to_string(rc);
    fs::remove_all(dir);
    return s;
  }
  std::stringstream ss;
  ss << f.rdbuf();
  Solution s = parse_sdpa_result(p, ss.str());
  fs::remove_all(dir);

  if (!original.inequalities.empty() && !s.block_duals.empty()) {
    const Eigen::MatrixXd slack = s.block_duals.back();
    s.block_duals.pop_back();
    for (int j = 0; j < slack.rows(); ++j) s.ineq_duals.push_back(slack(j, j));
  }
  return s;
}

}  // namespace leakrate
