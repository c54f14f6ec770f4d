#include "engine.hpp"

#include <exception>
#include <thread>

namespace abcdist::detail {

CandidateSource::CandidateSource(const SimulationModel& model, const ImportanceDensity& q,
                                 const RngStream& iteration_stream, std::size_t workers)
    : model_(model), q_(q) {
  if (workers == 0) throw Error("worker count must be positive");
  streams_.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) streams_.push_back(iteration_stream.fork(w));
}

Candidate CandidateSource::produce(RngStream& rng) {
  Proposal p = sample_proposal(q_, model_, rng);
  Candidate c;
  c.support_rejections = p.support_rejections;
  c.summary = model_.simulate(p.theta, rng);
  c.theta = std::move(p.theta);
  return c;
}

void CandidateSource::refill(std::size_t batch) {
  const std::size_t k = streams_.size();
  std::vector<std::vector<Candidate>> parts(k);
  std::vector<std::exception_ptr> errors(k);
  auto work = [&](std::size_t w, std::size_t count) {
    try {
      parts[w].reserve(count);
      for (std::size_t i = 0; i < count; ++i) parts[w].push_back(produce(streams_[w]));
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::size_t> counts(k, batch / k);
  for (std::size_t w = 0; w < batch % k; ++w) ++counts[w];
  {
    std::vector<std::jthread> threads;
    for (std::size_t w = 1; w < k; ++w)
      if (counts[w] > 0) threads.emplace_back(work, w, counts[w]);
    work(0, counts[0]);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& part : parts)
    for (auto& c : part) buffer_.push_back(std::move(c));
}

std::optional<Candidate> CandidateSource::next(std::size_t& remaining_budget) {
  if (buffer_.empty()) {
    if (remaining_budget == 0) return std::nullopt;
    const std::size_t k = streams_.size();
    if (k == 1) {
      --remaining_budget;
      ++simulated_;
      Candidate c = produce(streams_[0]);
      support_rejections_ += c.support_rejections;
      return c;
    }
    const std::size_t batch = std::min(k * kChunk, remaining_budget);
    remaining_budget -= batch;
    simulated_ += batch;
    refill(batch);
  }
  Candidate c = std::move(buffer_.front());
  buffer_.pop_front();
  support_rejections_ += c.support_rejections;
  return c;
}

IterationDraws draw_until(CandidateSource& source, const AcceptanceTest& test, std::size_t target,
                          std::size_t& remaining_budget, std::size_t scale_store_cap, std::size_t n_summaries) {
  IterationDraws out;
  std::vector<double> store;  // row-major while filling
  std::size_t stored = 0;
  out.accepted.reserve(target);
  while (out.accepted.size() < target) {
    auto c = source.next(remaining_budget);
    if (!c) break;
    ++out.consumed;
    if (!c->summary) {
      ++out.incomplete;
      continue;
    }
    if (static_cast<std::size_t>(c->summary->size()) != n_summaries)
      throw Error("model returned a summary of the wrong dimension");
    if (stored < scale_store_cap) {
      store.insert(store.end(), c->summary->data(), c->summary->data() + n_summaries);
      ++stored;
    }
    if (test(*c->summary)) out.accepted.push_back(std::move(*c));
  }
  out.complete = out.accepted.size() == target;
  out.scale_store.resize(static_cast<Eigen::Index>(stored), static_cast<Eigen::Index>(n_summaries));
  for (std::size_t r = 0; r < stored; ++r)
    for (std::size_t j = 0; j < n_summaries; ++j)
      out.scale_store(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = store[r * n_summaries + j];
  return out;
}

}  // namespace abcdist::detail
