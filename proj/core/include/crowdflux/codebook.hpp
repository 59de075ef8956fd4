// Copyright 2026 The CrowdFlux Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "crowdflux/features.hpp"

namespace crowdflux {

/// Least-squares code of a word within one dictionary.
struct SparseCode {
  int dictionary_id = -1;
  Eigen::VectorXd beta;
  double error = 0.0;  // ||x - D beta||_2
};

/// T x d matrix of unit-norm atoms with a cached Gram factorization.
class Dictionary {
 public:
  Dictionary() = default;

  /// Columns are projected to unit norm. Throws kInvalidConfig for a zero
  /// column or when d > T/2.
  Dictionary(int id, Eigen::MatrixXd atoms);

  int id() const noexcept { return id_; }
  void set_id(int id) noexcept { id_ = id; }
  int atom_count() const noexcept { return static_cast<int>(atoms_.cols()); }
  int word_length() const noexcept { return static_cast<int>(atoms_.rows()); }
  const Eigen::MatrixXd& atoms() const noexcept { return atoms_; }
  /// True when the Gram matrix needed ridge jitter to factor.
  bool jittered() const noexcept { return jittered_; }

  /// beta = (D^T D)^{-1} D^T x and its residual norm.
  SparseCode code(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double error(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Codes every column of `words` (T x N) at once; returns the d x N
  /// coefficients.
  Eigen::MatrixXd code_all(const Eigen::Ref<const Eigen::MatrixXd>& words) const;

 private:
  void factorize();

  int id_ = -1;
  Eigen::MatrixXd atoms_;
  Eigen::LLT<Eigen::MatrixXd> gram_;
  bool jittered_ = false;
};

inline constexpr double kGramJitter = 1e-8;

SparseCode least_squares_code(const VisualWord& word, const Dictionary& dictionary);

/// Ordered dictionaries plus the reconstruction error bound. Dictionary ids
/// equal their position; earlier dictionaries are scanned first.
struct GroupDictionary {
  std::vector<Dictionary> dictionaries;
  double lambda = 0.08;

  int size() const noexcept { return static_cast<int>(dictionaries.size()); }
  int word_length() const noexcept { return dictionaries.empty() ? 0 : dictionaries.front().word_length(); }
  int atom_count() const noexcept { return dictionaries.empty() ? 0 : dictionaries.front().atom_count(); }
};

enum class Label { kNormal, kAbnormal };

struct Classification {
  Label label = Label::kAbnormal;
  int dictionary_id = -1;  // first dictionary with error < lambda
  int second_id = -1;      // next passing dictionary in scan order, if any
  double error = std::numeric_limits<double>::infinity();  // best error among scanned dictionaries
  bool trivial = false;    // ||x|| < lambda: every dictionary passes, even with beta = 0

  /// Overlap signal: the word is reconstructible by two dictionaries.
  /// Trivial words pass everywhere and carry no information about overlap.
  bool overlap() const noexcept { return second_id >= 0 && !trivial; }
};

/// Scans dictionaries in order; the first with error < lambda labels the
/// word Normal. Scanning continues until a second passing dictionary is
/// found, so `error` is the minimum over the dictionaries actually scanned.
Classification classify_word(const VisualWord& word, const GroupDictionary& group);

struct TrainParams {
  double lambda = 0.08;
  int atoms = 10;
  int max_dictionaries = 64;
  int epochs = 10;
  std::uint64_t seed = 1;
  double coverage = 0.99;       // stop once this fraction of words is covered
  double trim_fraction = 0.1;   // share of nearest uncovered words fitted each epoch
  int init_attempts = 3;        // reseeds before declaring a coverage failure

  void validate() const;
};

struct TrainResult {
  GroupDictionary group;
  std::size_t uncovered = 0;      // words left with error > lambda everywhere
  bool coverage_failure = false;  // coverage target missed; a warning, not an error
};

/// Greedy sparse cover. Each new dictionary starts from seeded random
/// uncovered words, is refined by alternating least-squares coding with
/// column-wise block coordinate descent on the words it fits best, and then
/// absorbs every uncovered word it reconstructs within lambda. Repeats until
/// the coverage target or max_dictionaries is reached. Throws
/// kInsufficientWords when fewer than `atoms` words are given.
TrainResult train_group(std::span<const VisualWord> words, const TrainParams& params);

/// Sum of squared least-squares residuals of `words` under `dictionary`.
double pool_loss(const Dictionary& dictionary, std::span<const VisualWord> words);

/// `passes` projected gradient steps D <- P[D - delta * grad L] on the
/// loss above, with unit-column projection P. A step that would raise the
/// loss is retried at half the step size.
Dictionary gradient_update(const Dictionary& dictionary, std::span<const VisualWord> words, double delta, int passes);

struct PoolState {
  std::size_t count = 0;
  bool ready = false;
};

/// Normal words tagged with one dictionary, buffered until `capacity`.
class WordPool {
 public:
  WordPool(int dictionary_id, std::size_t capacity);

  /// Throws kTokenMismatch when `token` differs from the pool's dictionary.
  PoolState deposit(VisualWord word, int token);

  int dictionary_id() const noexcept { return dictionary_id_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool ready() const noexcept { return words_.size() >= capacity_; }
  const std::vector<VisualWord>& words() const noexcept { return words_; }
  std::vector<VisualWord> drain();

 private:
  int dictionary_id_;
  std::size_t capacity_;
  std::vector<VisualWord> words_;
};

/// Refines one dictionary from its full pool and drains the pool. The
/// caller installs the result. Throws kPoolNotReady below capacity.
Dictionary local_update(const Dictionary& dictionary, WordPool& pool, double delta, int passes);

/// Retrains the whole group on the union of pool words plus the triggering
/// word. Returns nullopt (pools untouched) when fewer than
/// max(atoms, min_words) words are available; otherwise drains the pools.
std::optional<GroupDictionary> global_update(const GroupDictionary& group, std::vector<WordPool>& pools,
                                             const TrainParams& params, const VisualWord* trigger = nullptr,
                                             std::size_t min_words = 0);

/// Holds the live group. Readers take an immutable snapshot; writers build a
/// replacement off to the side and install it in one swap.
class GroupStore {
 public:
  explicit GroupStore(GroupDictionary initial);

  std::shared_ptr<const GroupDictionary> snapshot() const;
  std::uint64_t version() const;

  void install(GroupDictionary next);
  /// Copy-on-write replacement of the member with the same id.
  void replace_dictionary(Dictionary updated);

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const GroupDictionary> current_;
  std::uint64_t version_ = 0;
};

}  // namespace crowdflux
