#pragma once

#include <deque>
#include <optional>
#include <vector>

#include "abcdist/distance.hpp"
#include "abcdist/model.hpp"
#include "abcdist/population.hpp"

namespace abcdist::detail {

struct Candidate {
  Vector theta;
  std::optional<Vector> summary;  // nullopt: incomplete simulation
  std::size_t support_rejections = 0;
};

// Deterministic stream of simulated proposals for one iteration.
//
// With one worker, candidates are produced on demand from substream 0. With
// k workers, batches of up to k * kChunk candidates are simulated in
// parallel, worker w drawing from substream w; candidates are served in a
// fixed order. Every simulated candidate is charged to the budget, including
// ones still buffered when the iteration ends.
class CandidateSource {
 public:
  static constexpr std::size_t kChunk = 16;

  CandidateSource(const SimulationModel& model, const ImportanceDensity& q, const RngStream& iteration_stream,
                  std::size_t workers);

  std::optional<Candidate> next(std::size_t& remaining_budget);

  std::size_t simulated() const { return simulated_; }
  std::size_t support_rejections() const { return support_rejections_; }

 private:
  Candidate produce(RngStream& rng);
  void refill(std::size_t batch);

  const SimulationModel& model_;
  const ImportanceDensity& q_;
  std::vector<RngStream> streams_;
  std::deque<Candidate> buffer_;
  std::size_t simulated_ = 0;
  std::size_t support_rejections_ = 0;
};

struct IterationDraws {
  std::vector<Candidate> accepted;
  Matrix scale_store;  // complete summaries, one per row, at most cap rows
  std::size_t consumed = 0;
  std::size_t incomplete = 0;
  bool complete = false;
};

// Pull candidates until `target` pass `test` or the budget runs out.
IterationDraws draw_until(CandidateSource& source, const AcceptanceTest& test, std::size_t target,
                          std::size_t& remaining_budget, std::size_t scale_store_cap, std::size_t n_summaries);

}  // namespace abcdist::detail
