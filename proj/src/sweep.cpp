#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "leakrate/errors.hpp"
#include "leakrate/single_round.hpp"

namespace leakrate {

namespace {

struct Job {
  double q;
  double delta;
};

}  // namespace

std::vector<SweepRow> sweep_curve(PresetId preset, const std::vector<double>& q_grid,
                                  const std::vector<double>& delta_list, LeakageKind model,
                                  const SweepOptions& opts) {
  std::vector<Job> jobs;
  for (double d : delta_list)
    for (double q : q_grid) jobs.push_back({q, d});
  // Each job produces a solid row and a dashed row, in a fixed slot.
  std::vector<SweepRow> rows(2 * jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Job& job = jobs[i];
        SingleRoundSpec spec = preset_spec(preset, job.q, LeakageModel{model, job.delta}, opts.encoding, opts.level);
        const BoundResult r = solve_single_round(spec, opts.solver, opts.cert_tol, opts.allow_uncertified);
        SweepRow solid{preset, model, opts.encoding, spec.npa_level, job.q, job.delta, false,
                       r.entropy_lower_bits, r.entropy_unclamped_bits, r.guessing_prob_upper,
                       r.certificate.inflation, r.certified};
        SweepRow dashed = solid;
        dashed.dashed = true;
        dashed.entropy_bits = dashed.entropy_unclamped_bits = r.entropy_without_fcont_bits;
        rows[2 * i] = solid;
        rows[2 * i + 1] = dashed;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };

  int n = opts.jobs > 0 ? opts.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n = std::min<int>(n, static_cast<int>(std::max<std::size_t>(1, jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::string model_label(const SweepRow& row) {
  std::string label = to_string(row.model);
  if (row.dashed) label += "-dashed";
  return label;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "preset,model,encoding,level,q,delta,entropy_bits,pguess,cert_slack\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << to_string(r.preset) << ',' << model_label(r) << ',' << to_string(r.encoding) << ',' << r.level << ','
        << num(r.q) << ',' << num(r.delta) << ',' << num(r.entropy_bits) << ',' << num(r.pguess) << ','
        << (r.certified ? num(r.cert_slack) : std::string("NA")) << '\n';
  }
  return out.str();
}

}  // namespace leakrate
