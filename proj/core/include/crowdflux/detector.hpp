// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <future>
#include <optional>
#include <span>
#include <vector>

#include "crowdflux/codebook.hpp"

namespace crowdflux {

struct DetectorOptions {
  bool update = true;
  std::size_t pool_capacity = 4000;
  std::size_t global_min_words = 4000;
  double delta = 1e-4;
  int passes = 1;
  TrainParams train;  // used by global retraining; lambda is taken from the group
  int workers = 1;
};

struct DetectorStats {
  int clips = 0;
  int local_updates = 0;
  int global_updates = 0;
  int deferred_global = 0;      // clips that ended with the overlap latch set but too few pool words
  std::size_t dropped_words = 0;  // deposits discarded because a global update renumbered the group
};

/// Online classification with word pools and background updates.
///
/// Clips are handled in a fixed pipeline. Clip c is classified against the
/// snapshot current when it arrives, with words spread over the workers.
/// The update job launched after clip c-1 runs concurrently with that
/// classification and is installed right after it. Then clip c's Normal
/// words go to their pools, the overlap latch is refreshed, and the next
/// job (one global retrain, or local refits of every ready pool) starts.
/// Because install points depend only on clip order, results do not depend
/// on the worker count.
class Detector {
 public:
  Detector(GroupDictionary initial, DetectorOptions options);
  ~Detector();
  Detector(const Detector&) = delete;
  Detector& operator=(const Detector&) = delete;

  /// Classifies one clip's words (any order; results follow input order).
  std::vector<Classification> process(std::span<const VisualWord> words);

  /// Waits for and installs any in-flight update.
  void finish();

  std::shared_ptr<const GroupDictionary> snapshot() const { return store_.snapshot(); }
  std::uint64_t version() const { return store_.version(); }
  const DetectorStats& stats() const noexcept { return stats_; }
  const std::vector<WordPool>& pools() const noexcept { return pools_; }
  bool overlap_latched() const noexcept { return latch_; }

 private:
  struct Job {
    std::optional<GroupDictionary> global;  // set for a global retrain
    std::vector<Dictionary> locals;         // refitted dictionaries otherwise
  };

  void install_pending();
  void reset_pools(int count);
  void schedule();

  DetectorOptions options_;
  GroupStore store_;
  std::vector<WordPool> pools_;
  std::uint64_t layout_ = 0;  // bumps when a global update renumbers dictionaries
  bool latch_ = false;
  VisualWord trigger_;  // first overlapping word; meaningful while latch_ is set
  std::future<Job> pending_;
  DetectorStats stats_;
};

}  // namespace crowdflux
