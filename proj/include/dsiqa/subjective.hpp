#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dsiqa/dataset.hpp"
#include "dsiqa/stats.hpp"

namespace dsiqa {

enum class Side { Left, Right };

std::string_view side_name(Side s) noexcept;
std::optional<Side> parse_side(std::string_view s) noexcept;

/// One forced-choice judgment.
struct VoteRecord {
  std::string observer_id;
  std::string session_id;
  std::string reference_id;
  double left_lambda = 0.0;
  double right_lambda = 0.0;
  Side winner = Side::Left;
  std::string timestamp;  // ISO-8601 UTC, e.g. 2024-05-01T12:00:00Z

  double winning_lambda() const noexcept { return winner == Side::Left ? left_lambda : right_lambda; }
};

std::string vote_to_json(const VoteRecord& vote);
VoteRecord vote_from_json(std::string_view line);
std::string utc_timestamp_now();

/// Reads a JSON-lines vote log; blank lines are skipped.
std::vector<VoteRecord> read_vote_log(const std::filesystem::path& path);

struct ScheduledPair {
  std::string reference_id;
  double left_lambda = 0.0;
  double right_lambda = 0.0;

  friend bool operator==(const ScheduledPair&, const ScheduledPair&) = default;
};

/// Full round-robin over each reference's lambdas, with the global order and
/// left/right placement shuffled from (observer_id, seed).
std::vector<ScheduledPair> schedule_pairs(const DatasetManifest& manifest, std::string_view observer_id,
                                          std::uint64_t seed);

enum class RecordOutcome { Appended, Duplicate };

/// Append-only vote store backed by a JSON-lines file (or memory only when
/// constructed without a path). Thread-safe.
class VoteLog {
 public:
  /// Loads existing records from `path` if it exists. `lambdas` are the
  /// manifest's threshold multipliers.
  VoteLog(std::optional<std::filesystem::path> path, std::vector<double> lambdas);
  ~VoteLog();

  VoteLog(const VoteLog&) = delete;
  VoteLog& operator=(const VoteLog&) = delete;

  void register_session(const std::string& session_id, const std::string& observer_id,
                        const std::vector<ScheduledPair>& schedule);
  bool has_session(const std::string& session_id) const;

  /// Validates and appends durably. An exact re-submission is a no-op.
  RecordOutcome record(const VoteRecord& vote);

  /// Winner previously recorded for a pair in a session, if any.
  std::optional<Side> answer(const std::string& session_id, const ScheduledPair& pair) const;

  std::vector<VoteRecord> snapshot() const;
  std::size_t size() const;

 private:
  using PairKey = std::tuple<std::string, std::string, double, double>;  // session, reference, left, right

  mutable std::mutex mutex_;
  std::optional<std::filesystem::path> path_;
  int fd_ = -1;
  std::vector<double> lambdas_;
  std::map<std::string, std::pair<std::string, std::set<std::tuple<std::string, double, double>>>> sessions_;
  std::map<PairKey, Side> answers_;
  std::vector<VoteRecord> records_;
};

struct ScoreCell {
  int wins = 0;
  int comparisons = 0;
};

/// Win counts per distorted image and observer. Only (observer, image)
/// combinations that appear in at least one vote are present.
struct ScoreTable {
  std::set<std::string> observers;
  std::map<ImageKey, std::map<std::string, ScoreCell>> cells;

  int wins(const ImageKey& image, const std::string& observer) const;
};

ScoreTable observer_scores(const std::vector<VoteRecord>& votes, const DatasetManifest& manifest);

struct MosEntry {
  double mos = 0.0;
  std::size_t n_accepted = 0;
  std::size_t n_rejected = 0;
};

struct MosTable {
  std::map<ImageKey, MosEntry> entries;
  std::size_t total_estimates = 0;
  std::size_t rejected_estimates = 0;
  double rejected_fraction = 0.0;

  std::map<ImageKey, double> values() const;
};

/// Estimates farther than this many population standard deviations from the
/// per-image mean are rejected before averaging.
inline constexpr double kScreeningDeviations = 2.0;

MosTable screen_and_mos(const ScoreTable& scores);

/// CSV "image_id,lambda,mos,n_accepted".
void write_mos_csv(const MosTable& mos, const std::filesystem::path& path);
std::map<ImageKey, double> read_mos_csv(const std::filesystem::path& path);

}  // namespace dsiqa
