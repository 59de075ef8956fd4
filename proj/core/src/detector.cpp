// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#include "crowdflux/detector.hpp"

#include "crowdflux/error.hpp"
#include "crowdflux/parallel.hpp"

namespace crowdflux {

Detector::Detector(GroupDictionary initial, DetectorOptions options)
    : options_(std::move(options)), store_(std::move(initial)) {
  if (options_.pool_capacity == 0) throw Error(ErrorCode::kInvalidConfig, "pool capacity must be positive");
  reset_pools(store_.snapshot()->size());
}

Detector::~Detector() {
  if (pending_.valid()) pending_.wait();
}

void Detector::reset_pools(int count) {
  pools_.clear();
  pools_.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) pools_.emplace_back(i, options_.pool_capacity);
}

std::vector<Classification> Detector::process(std::span<const VisualWord> words) {
  const std::shared_ptr<const GroupDictionary> group = store_.snapshot();
  const std::uint64_t layout = layout_;

  std::vector<Classification> out(words.size());
  parallel_for(words.size(), options_.workers,
               [&](std::size_t i) { out[i] = classify_word(words[i], *group); });
  ++stats_.clips;
  if (!options_.update) return out;

  install_pending();

  for (std::size_t i = 0; i < words.size(); ++i) {
    const Classification& c = out[i];
    if (c.label != Label::kNormal || c.trivial) continue;
    if (layout != layout_) {
      ++stats_.dropped_words;
      continue;
    }
    pools_[static_cast<std::size_t>(c.dictionary_id)].deposit(words[i], c.dictionary_id);
    if (c.overlap() && !latch_) {
      latch_ = true;
      trigger_ = words[i];
    }
  }
  schedule();
  return out;
}

void Detector::schedule() {
  std::size_t pooled = 0;
  for (const auto& p : pools_) pooled += p.size();
  const GroupDictionary current = *store_.snapshot();

  if (latch_) {
    const std::size_t need = std::max<std::size_t>(static_cast<std::size_t>(current.atom_count()),
                                                   options_.global_min_words);
    if (pooled + 1 >= need) {
      std::vector<WordPool> taken = pools_;
      VisualWord trigger = std::move(trigger_);
      for (auto& p : pools_) p.drain();
      latch_ = false;
      trigger_ = {};
      TrainParams params = options_.train;
      pending_ = std::async(std::launch::async, [current, taken = std::move(taken), trigger = std::move(trigger),
                                                 params, need]() mutable {
        Job job;
        try {
          job.global = global_update(current, taken, params, &trigger, need);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kInsufficientWords) throw;
        }
        return job;
      });
      return;
    }
    ++stats_.deferred_global;
  }

  std::vector<std::pair<Dictionary, std::vector<VisualWord>>> work;
  for (auto& p : pools_) {
    if (p.ready()) work.emplace_back(current.dictionaries[static_cast<std::size_t>(p.dictionary_id())], p.drain());
  }
  if (work.empty()) return;
  const double delta = options_.delta;
  const int passes = options_.passes;
  pending_ = std::async(std::launch::async, [work = std::move(work), delta, passes]() {
    Job job;
    for (const auto& [dict, words] : work) job.locals.push_back(gradient_update(dict, words, delta, passes));
    return job;
  });
}

void Detector::install_pending() {
  if (!pending_.valid()) return;
  Job job = pending_.get();
  if (job.global) {
    store_.install(std::move(*job.global));
    ++stats_.global_updates;
    ++layout_;
    reset_pools(store_.snapshot()->size());
    latch_ = false;
    trigger_ = {};
    return;
  }
  for (auto& dict : job.locals) {
    store_.replace_dictionary(std::move(dict));
    ++stats_.local_updates;
  }
}

void Detector::finish() { install_pending(); }

}  // namespace crowdflux
