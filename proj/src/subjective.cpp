#include "dsiqa/subjective.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dsiqa/error.hpp"
#include "dsiqa/text.hpp"

namespace dsiqa {

using ordered_json = nlohmann::ordered_json;

std::string_view side_name(Side s) noexcept { return s == Side::Left ? "left" : "right"; }

std::optional<Side> parse_side(std::string_view s) noexcept {
  if (s == "left") return Side::Left;
  if (s == "right") return Side::Right;
  return std::nullopt;
}

std::string vote_to_json(const VoteRecord& v) {
  ordered_json j;
  j["observer_id"] = v.observer_id;
  j["session_id"] = v.session_id;
  j["reference_id"] = v.reference_id;
  j["left_lambda"] = v.left_lambda;
  j["right_lambda"] = v.right_lambda;
  j["winner"] = side_name(v.winner);
  j["timestamp"] = v.timestamp;
  return j.dump();
}

VoteRecord vote_from_json(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Input, std::string("vote record is not valid JSON: ") + e.what());
  }
  try {
    VoteRecord v;
    v.observer_id = j.at("observer_id").get<std::string>();
    v.session_id = j.at("session_id").get<std::string>();
    v.reference_id = j.at("reference_id").get<std::string>();
    v.left_lambda = j.at("left_lambda").get<double>();
    v.right_lambda = j.at("right_lambda").get<double>();
    const auto winner = parse_side(j.at("winner").get<std::string>());
    if (!winner) fail(ErrorKind::Input, "vote winner must be 'left' or 'right'");
    v.winner = *winner;
    v.timestamp = j.at("timestamp").get<std::string>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, std::string("vote record is missing a field: ") + e.what());
  }
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<VoteRecord> read_vote_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Input, path.string() + ": cannot open vote log");
  std::vector<VoteRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(vote_from_json(line));
    } catch (const Error& e) {
      fail(ErrorKind::Input, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

// Unbiased draw in [0, bound) by rejection.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return v % bound;
  }
}

}  // namespace

std::vector<ScheduledPair> schedule_pairs(const DatasetManifest& manifest, std::string_view observer_id,
                                          std::uint64_t seed) {
  std::vector<ScheduledPair> pairs;
  for (const auto& e : manifest.entries) {
    for (std::size_t a = 0; a < manifest.lambdas.size(); ++a) {
      for (std::size_t b = a + 1; b < manifest.lambdas.size(); ++b) {
        pairs.push_back({e.id, manifest.lambdas[a], manifest.lambdas[b]});
      }
    }
  }
  std::mt19937_64 rng(splitmix64(seed ^ fnv1a64(observer_id)));
  for (std::size_t i = pairs.size(); i > 1; --i) {
    std::swap(pairs[i - 1], pairs[bounded(rng, i)]);
  }
  for (auto& p : pairs) {
    if (rng() & 1U) std::swap(p.left_lambda, p.right_lambda);
  }
  return pairs;
}

VoteLog::VoteLog(std::optional<std::filesystem::path> path, std::vector<double> lambdas)
    : path_(std::move(path)), lambdas_(std::move(lambdas)) {
  if (!path_) return;
  if (std::filesystem::exists(*path_)) {
    for (auto& v : read_vote_log(*path_)) {
      answers_[{v.session_id, v.reference_id, v.left_lambda, v.right_lambda}] = v.winner;
      records_.push_back(std::move(v));
    }
  }
  fd_ = ::open(path_->c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) fail(ErrorKind::Io, path_->string() + ": cannot open vote log for appending");
}

VoteLog::~VoteLog() {
  if (fd_ >= 0) ::close(fd_);
}

void VoteLog::register_session(const std::string& session_id, const std::string& observer_id,
                               const std::vector<ScheduledPair>& schedule) {
  std::lock_guard lock(mutex_);
  auto& s = sessions_[session_id];
  s.first = observer_id;
  s.second.clear();
  for (const auto& p : schedule) s.second.insert({p.reference_id, p.left_lambda, p.right_lambda});
}

bool VoteLog::has_session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return sessions_.contains(session_id);
}

RecordOutcome VoteLog::record(const VoteRecord& vote) {
  std::lock_guard lock(mutex_);
  const auto session = sessions_.find(vote.session_id);
  if (session == sessions_.end()) fail(ErrorKind::NotFound, "unknown session '" + vote.session_id + "'");
  if (session->second.first != vote.observer_id) {
    fail(ErrorKind::InvalidArgument, "session '" + vote.session_id + "' belongs to a different observer");
  }
  for (double l : {vote.left_lambda, vote.right_lambda}) {
    if (std::find(lambdas_.begin(), lambdas_.end(), l) == lambdas_.end()) {
      fail(ErrorKind::InvalidArgument, "lambda " + format_lambda(l) + " is not in the manifest");
    }
  }
  if (vote.left_lambda == vote.right_lambda) fail(ErrorKind::InvalidArgument, "a pair needs two distinct lambdas");
  if (!session->second.second.contains({vote.reference_id, vote.left_lambda, vote.right_lambda})) {
    fail(ErrorKind::InvalidArgument, "pair is not in the schedule of session '" + vote.session_id + "'");
  }
  const PairKey key{vote.session_id, vote.reference_id, vote.left_lambda, vote.right_lambda};
  if (const auto it = answers_.find(key); it != answers_.end()) {
    if (it->second == vote.winner) return RecordOutcome::Duplicate;
    fail(ErrorKind::Conflict, "pair already answered with a different winner");
  }
  if (fd_ >= 0) {
    const std::string line = vote_to_json(vote) + "\n";
    // One write per record; O_APPEND keeps concurrent appends whole.
    const ssize_t n = ::write(fd_, line.data(), line.size());
    if (n != static_cast<ssize_t>(line.size())) fail(ErrorKind::Io, path_->string() + ": vote append failed");
    ::fsync(fd_);
  }
  answers_.emplace(key, vote.winner);
  records_.push_back(vote);
  return RecordOutcome::Appended;
}

std::optional<Side> VoteLog::answer(const std::string& session_id, const ScheduledPair& pair) const {
  std::lock_guard lock(mutex_);
  const auto it = answers_.find({session_id, pair.reference_id, pair.left_lambda, pair.right_lambda});
  if (it == answers_.end()) return std::nullopt;
  return it->second;
}

std::vector<VoteRecord> VoteLog::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t VoteLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

int ScoreTable::wins(const ImageKey& image, const std::string& observer) const {
  const auto it = cells.find(image);
  if (it == cells.end()) return 0;
  const auto jt = it->second.find(observer);
  return jt == it->second.end() ? 0 : jt->second.wins;
}

ScoreTable observer_scores(const std::vector<VoteRecord>& votes, const DatasetManifest& manifest) {
  ScoreTable table;
  for (const auto& v : votes) {
    const auto* entry = manifest.find(v.reference_id);
    if (entry == nullptr) fail(ErrorKind::Input, "vote references unknown image id '" + v.reference_id + "'");
    for (double l : {v.left_lambda, v.right_lambda}) {
      if (std::find(manifest.lambdas.begin(), manifest.lambdas.end(), l) == manifest.lambdas.end()) {
        fail(ErrorKind::Input, "vote for '" + v.reference_id + "' uses lambda " + format_lambda(l) +
                                   " which is not in the manifest");
      }
    }
    table.observers.insert(v.observer_id);
    const ImageKey left{v.reference_id, v.left_lambda};
    const ImageKey right{v.reference_id, v.right_lambda};
    table.cells[left][v.observer_id].comparisons++;
    table.cells[right][v.observer_id].comparisons++;
    table.cells[v.winner == Side::Left ? left : right][v.observer_id].wins++;
  }
  return table;
}

std::map<ImageKey, double> MosTable::values() const {
  std::map<ImageKey, double> out;
  for (const auto& [key, e] : entries) out.emplace(key, e.mos);
  return out;
}

MosTable screen_and_mos(const ScoreTable& scores) {
  if (scores.observers.size() < 2) {
    fail(ErrorKind::InvalidArgument, "MOS screening needs at least 2 observers, got " +
                                         std::to_string(scores.observers.size()));
  }
  MosTable table;
  for (const auto& [key, by_observer] : scores.cells) {
    std::vector<double> est;
    for (const auto& [obs, cell] : by_observer) est.push_back(cell.wins);
    const double n = static_cast<double>(est.size());
    double mean = 0.0;
    for (double w : est) mean += w;
    mean /= n;
    double var = 0.0;
    for (double w : est) var += (w - mean) * (w - mean);
    const double sd = std::sqrt(var / n);

    double sum = 0.0;
    std::size_t accepted = 0;
    for (double w : est) {
      if (std::abs(w - mean) > kScreeningDeviations * sd) continue;
      sum += w;
      ++accepted;
    }
    MosEntry entry;
    if (accepted == 0) {
      entry.mos = mean;
      entry.n_accepted = est.size();
    } else {
      entry.mos = sum / static_cast<double>(accepted);
      entry.n_accepted = accepted;
      entry.n_rejected = est.size() - accepted;
    }
    table.total_estimates += est.size();
    table.rejected_estimates += entry.n_rejected;
    table.entries.emplace(key, entry);
  }
  table.rejected_fraction = table.total_estimates == 0
                                ? 0.0
                                : static_cast<double>(table.rejected_estimates) / static_cast<double>(table.total_estimates);
  return table;
}

void write_mos_csv(const MosTable& mos, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "image_id,lambda,mos,n_accepted\n";
  for (const auto& [key, e] : mos.entries) {
    os << key.image_id << ',' << format_lambda(key.lambda) << ',' << format_double(e.mos) << ',' << e.n_accepted << '\n';
  }
  write_text_file(path, os.str());
}

std::map<ImageKey, double> read_mos_csv(const std::filesystem::path& path) {
  const auto csv = read_csv(path);
  auto col = [&](const char* name) {
    const auto it = std::find(csv.header.begin(), csv.header.end(), name);
    if (it == csv.header.end()) fail(ErrorKind::Input, path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - csv.header.begin());
  };
  const auto id_col = col("image_id");
  const auto lambda_col = col("lambda");
  const auto mos_col = col("mos");
  std::map<ImageKey, double> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const auto where = path.string() + ":" + std::to_string(csv.line_numbers[r]);
    const auto lambda = parse_double(row[lambda_col]);
    const auto mos = parse_double(row[mos_col]);
    if (!lambda || !mos) fail(ErrorKind::Input, where + ": invalid number for image '" + row[id_col] + "'");
    if (!out.emplace(ImageKey{row[id_col], *lambda}, *mos).second) {
      fail(ErrorKind::Input, where + ": duplicate row for image '" + row[id_col] + "'");
    }
  }
  return out;
}

}  // namespace dsiqa
