#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sppc/errors.hpp"
#include "sppc/plant.hpp"
#include "sppc/solvers.hpp"

namespace sppc {

/// Erasure pattern d(0..T-1); true = packet dropped.
struct DropoutTrace {
  std::vector<bool> dropped;
  int N_bound = 0;  // horizon N; admissible bursts are at most N - 1 long

  int size() const { return static_cast<int>(dropped.size()); }
  /// Lengths of the maximal runs of consecutive drops, in order.
  std::vector<int> bursts() const;
  int max_burst() const;
  /// d(0) = false and no burst longer than N_bound - 1.
  bool admissible() const;
  /// Time instants with d(k) = false.
  std::vector<int> reception_instants() const;
};

/// Reception at k = 0, then bursts of m ~ U{1..N-1} drops separated by `gap`
/// receptions, truncated at T. Deterministic in seed.
DropoutTrace gen_bounded_uniform_trace(int N, int T, std::uint64_t seed, int gap = 1);

/// i.i.d. drops with probability p after a forced reception at k = 0. No
/// burst bound; closed loops on these traces may hit ProtocolError.
DropoutTrace gen_bernoulli_trace(double p, int N, int T, std::uint64_t seed);

/// Maps a measured state to a control packet. Must be safe to call
/// concurrently.
using Designer = std::function<Packet(const Eigen::VectorXd&)>;

/**
 * Closed-loop record. The controller computes a packet at every step; the
 * actuator buffer only takes it when d(k) = false.
 */
struct SimTrace {
  std::vector<Eigen::VectorXd> states;   // x(0..T)
  std::vector<double> inputs;            // u(0..T-1)
  DropoutTrace dropped;                  // d(0..T-1)
  std::vector<int> ages;                 // buffer index used at k
  std::vector<int> sparsity;             // ||u(x(k))||_0, k = 0..T-1
  std::vector<double> norms;             // ||x(k)||_2, k = 0..T
  std::vector<Eigen::VectorXd> packets;  // u(x(k)), k = 0..T-1
};

/// Runs T steps of the buffered-actuator protocol. Throws ProtocolError when
/// the buffer would be read past its end (age >= N) or before any reception.
SimTrace run_closed_loop(const PlantModel& plant, const Designer& designer,
                         const DropoutTrace& trace, const Eigen::VectorXd& x0, int T);

struct TraceCheck {
  double max_propagation_error = 0.0;  // max_k ||x(k+1) - A x(k) - B u(k)||_inf
  bool protocol_consistent = true;     // u(k) == packet of last reception [age]
};

/// Re-derives the trace from its packets and dropout pattern.
TraceCheck check_sim_trace(const PlantModel& plant, const SimTrace& trace);

/// splitmix64 of master + counter * golden ratio; used to derive independent
/// per-run (and per-stream) seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

struct ChannelModel {
  enum class Kind { BoundedUniform, Bernoulli };
  Kind kind = Kind::BoundedUniform;
  int gap = 1;         // receptions between bursts (BoundedUniform)
  double p_drop = 0.0;  // drop probability (Bernoulli)
};

struct NamedDesigner {
  std::string label;
  Designer designer;
};

struct Experiment {
  PlantModel plant;
  int N;
  std::vector<NamedDesigner> designers;
  ChannelModel channel;
  int T = 100;
};

/// x0 ~ N(0, I) and the dropout trace for one run, shared by every designer.
struct RunInputs {
  std::uint64_t seed;
  Eigen::VectorXd x0;
  DropoutTrace trace;
};

RunInputs make_run_inputs(const Experiment& experiment, std::uint64_t run_seed);

/// Seed of run `index` under master seed `seed`.
inline std::uint64_t run_seed(std::uint64_t seed, std::uint64_t index) {
  return derive_seed(seed, index);
}

struct MonteCarloOptions {
  int threads = 1;
  bool keep_traces = false;
};

struct MonteCarloResult {
  std::vector<std::string> labels;
  int runs = 0;
  int T = 0;
  std::vector<std::vector<double>> avg_norm;      // [designer][k], k = 0..T-1
  std::vector<std::vector<double>> avg_sparsity;  // [designer][k]
  std::vector<std::vector<SimTrace>> traces;      // [run][designer] if kept
  std::vector<RunInputs> inputs;                  // [run] if kept
};

/// Error raised by one Monte Carlo run; carries what is needed to replay it.
class RunError : public Error {
 public:
  RunError(int run, std::uint64_t seed, const std::string& label, const std::string& what,
           bool protocol)
      : Error("run " + std::to_string(run) + " (seed " + std::to_string(seed) + ", designer " +
              label + "): " + what),
        run_(run),
        seed_(seed),
        protocol_(protocol) {}

  int run() const { return run_; }
  std::uint64_t seed() const { return seed_; }
  bool protocol() const { return protocol_; }

 private:
  int run_;
  std::uint64_t seed_;
  bool protocol_;
};

/// Runs are independent and may execute on several threads; the reduction is
/// ordered by run index, so the result does not depend on the thread count.
MonteCarloResult monte_carlo(const Experiment& experiment, int runs, std::uint64_t seed,
                             const MonteCarloOptions& options = {});

}  // namespace sppc
