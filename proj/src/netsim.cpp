#include "sppc/netsim.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <random>
#include <thread>

namespace sppc {

using Eigen::VectorXd;

std::vector<int> DropoutTrace::bursts() const {
  std::vector<int> out;
  int run = 0;
  for (bool d : dropped) {
    if (d) {
      ++run;
    } else if (run > 0) {
      out.push_back(run);
      run = 0;
    }
  }
  if (run > 0) out.push_back(run);
  return out;
}

int DropoutTrace::max_burst() const {
  const std::vector<int> b = bursts();
  return b.empty() ? 0 : *std::max_element(b.begin(), b.end());
}

bool DropoutTrace::admissible() const {
  if (!dropped.empty() && dropped.front()) return false;
  return max_burst() <= N_bound - 1;
}

std::vector<int> DropoutTrace::reception_instants() const {
  std::vector<int> out;
  for (int k = 0; k < size(); ++k) {
    if (!dropped[k]) out.push_back(k);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DropoutTrace gen_bounded_uniform_trace(int N, int T, std::uint64_t seed, int gap) {
  if (N < 2) throw ParameterError("bounded-uniform dropouts need N >= 2");
  if (T < 1) throw ParameterError("trace length T must be >= 1");
  if (gap < 1) throw ParameterError("gap between bursts must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::uniform_int_distribution<int> burst(1, N - 1);

  DropoutTrace trace;
  trace.N_bound = N;
  trace.dropped.reserve(T);
  while (trace.size() < T) {
    for (int g = 0; g < gap && trace.size() < T; ++g) trace.dropped.push_back(false);
    const int m = burst(rng);
    for (int j = 0; j < m && trace.size() < T; ++j) trace.dropped.push_back(true);
  }
  return trace;
}

DropoutTrace gen_bernoulli_trace(double p, int N, int T, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw ParameterError("drop probability must lie in [0,1)");
  if (T < 1) throw ParameterError("trace length T must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::bernoulli_distribution drop(p);
  DropoutTrace trace;
  trace.N_bound = N;
  trace.dropped.reserve(T);
  trace.dropped.push_back(false);
  for (int k = 1; k < T; ++k) trace.dropped.push_back(drop(rng));
  return trace;
}

SimTrace run_closed_loop(const PlantModel& plant, const Designer& designer,
                         const DropoutTrace& trace, const VectorXd& x0, int T) {
  if (T < 0) throw ParameterError("T must be >= 0");
  if (trace.size() < T) throw ParameterError("dropout trace shorter than T");
  if (x0.size() != plant.n()) throw ParameterError("x0 has the wrong size");

  SimTrace out;
  out.dropped.N_bound = trace.N_bound;
  out.dropped.dropped.assign(trace.dropped.begin(), trace.dropped.begin() + T);
  out.states.reserve(T + 1);
  out.states.push_back(x0);
  out.norms.push_back(x0.norm());

  std::optional<VectorXd> buffer;
  int age = 0;
  for (int k = 0; k < T; ++k) {
    const VectorXd& x = out.states.back();
    Packet packet = designer(x);
    out.sparsity.push_back(packet.sparsity);
    if (!trace.dropped[k]) {
      buffer = packet.u;
      age = 0;
    } else {
      if (!buffer) throw ProtocolError("k=" + std::to_string(k) + ": dropout before any reception");
      ++age;
      if (age >= buffer->size()) {
        throw ProtocolError("k=" + std::to_string(k) + ": buffer exhausted (" +
                            std::to_string(age) + " consecutive dropouts, N = " +
                            std::to_string(buffer->size()) + ")");
      }
    }
    const double u = (*buffer)(age);
    out.packets.push_back(std::move(packet.u));
    out.inputs.push_back(u);
    out.ages.push_back(age);
    VectorXd next = propagate(plant, x, u);
    out.norms.push_back(next.norm());
    out.states.push_back(std::move(next));
  }
  return out;
}

TraceCheck check_sim_trace(const PlantModel& plant, const SimTrace& trace) {
  TraceCheck check;
  const int T = static_cast<int>(trace.inputs.size());
  int last = -1;
  for (int k = 0; k < T; ++k) {
    const VectorXd expected = plant.A() * trace.states[k] + plant.B() * trace.inputs[k];
    check.max_propagation_error = std::max(
        check.max_propagation_error, (trace.states[k + 1] - expected).lpNorm<Eigen::Infinity>());
    if (!trace.dropped.dropped[k]) last = k;
    if (last < 0) {
      check.protocol_consistent = false;
      continue;
    }
    const int age = k - last;
    if (age != trace.ages[k] || age >= trace.packets[last].size() ||
        trace.packets[last](age) != trace.inputs[k]) {
      check.protocol_consistent = false;
    }
  }
  return check;
}

RunInputs make_run_inputs(const Experiment& experiment, std::uint64_t seed) {
  RunInputs in;
  in.seed = seed;
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  in.x0.resize(experiment.plant.n());
  for (Eigen::Index i = 0; i < in.x0.size(); ++i) in.x0(i) = normal(rng);
  const std::uint64_t trace_seed = derive_seed(seed, 2);
  switch (experiment.channel.kind) {
    case ChannelModel::Kind::BoundedUniform:
      in.trace = gen_bounded_uniform_trace(experiment.N, experiment.T, trace_seed,
                                           experiment.channel.gap);
      break;
    case ChannelModel::Kind::Bernoulli:
      in.trace = gen_bernoulli_trace(experiment.channel.p_drop, experiment.N, experiment.T,
                                     trace_seed);
      break;
  }
  return in;
}

namespace {

struct RunSeries {
  std::vector<std::vector<double>> norms;    // [designer][k]
  std::vector<std::vector<int>> sparsity;    // [designer][k]
  std::vector<SimTrace> traces;
};

RunSeries simulate_run(const Experiment& experiment, int run, const RunInputs& in,
                       bool keep_trace) {
  RunSeries series;
  for (const NamedDesigner& d : experiment.designers) {
    SimTrace trace;
    try {
      trace = run_closed_loop(experiment.plant, d.designer, in.trace, in.x0, experiment.T);
    } catch (const ProtocolError& e) {
      throw RunError(run, in.seed, d.label, e.what(), true);
    } catch (const Error& e) {
      throw RunError(run, in.seed, d.label, e.what(), false);
    }
    series.norms.emplace_back(trace.norms.begin(), trace.norms.begin() + experiment.T);
    series.sparsity.push_back(trace.sparsity);
    if (keep_trace) series.traces.push_back(std::move(trace));
  }
  return series;
}

}  // namespace

MonteCarloResult monte_carlo(const Experiment& experiment, int runs, std::uint64_t seed,
                             const MonteCarloOptions& options) {
  if (runs < 1) throw ParameterError("runs must be >= 1");
  if (experiment.T < 1) throw ParameterError("T must be >= 1");

  std::vector<RunInputs> inputs;
  inputs.reserve(runs);
  for (int run = 0; run < runs; ++run) {
    inputs.push_back(make_run_inputs(experiment, run_seed(seed, run)));
  }

  std::vector<std::optional<RunSeries>> results(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int run = next.fetch_add(1); run < runs; run = next.fetch_add(1)) {
      try {
        results[run] = simulate_run(experiment, run, inputs[run], options.keep_traces);
      } catch (...) {
        errors[run] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(options.threads, 1, runs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);  // lowest failing run index
  }

  const std::size_t D = experiment.designers.size();
  const int T = experiment.T;
  MonteCarloResult out;
  out.runs = runs;
  out.T = T;
  for (const NamedDesigner& d : experiment.designers) out.labels.push_back(d.label);
  out.avg_norm.assign(D, std::vector<double>(T, 0.0));
  out.avg_sparsity.assign(D, std::vector<double>(T, 0.0));
  for (int run = 0; run < runs; ++run) {
    const RunSeries& s = *results[run];
    for (std::size_t d = 0; d < D; ++d) {
      for (int k = 0; k < T; ++k) {
        out.avg_norm[d][k] += s.norms[d][k];
        out.avg_sparsity[d][k] += s.sparsity[d][k];
      }
    }
  }
  for (std::size_t d = 0; d < D; ++d) {
    for (int k = 0; k < T; ++k) {
      out.avg_norm[d][k] /= runs;
      out.avg_sparsity[d][k] /= runs;
    }
  }
  if (options.keep_traces) {
    out.traces.reserve(runs);
    for (int run = 0; run < runs; ++run) out.traces.push_back(std::move(results[run]->traces));
    out.inputs = std::move(inputs);
  }
  return out;
}

}  // namespace sppc
