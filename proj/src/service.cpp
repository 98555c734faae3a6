#include "dsiqa/service.hpp"

#include <sodium.h>

#include <algorithm>
#include <set>

#include <json.hpp>

#include "dsiqa/error.hpp"
#include "dsiqa/text.hpp"

namespace dsiqa {

using json = nlohmann::json;

namespace {

ApiResponse json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

ApiResponse error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

std::string to_hex(const unsigned char* data, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(2 * n, '0');
  for (std::size_t i = 0; i < n; ++i) {
    out[2 * i] = digits[data[i] >> 4];
    out[2 * i + 1] = digits[data[i] & 0xF];
  }
  return out;
}

json progress_json(std::size_t answered, std::size_t total) {
  return {{"answered", answered}, {"total", total}};
}

}  // namespace

StudyService::StudyService(DatasetManifest manifest, std::optional<std::filesystem::path> votes_path,
                           std::uint64_t seed)
    : manifest_(std::move(manifest)), seed_(seed), key_(crypto_generichash_KEYBYTES) {
  if (sodium_init() < 0) fail(ErrorKind::Io, "libsodium initialisation failed");
  const std::string material = "dsiqa-study-key:" + std::to_string(seed_);
  crypto_generichash(key_.data(), key_.size(), reinterpret_cast<const unsigned char*>(material.data()),
                     material.size(), nullptr, 0);
  votes_ = std::make_unique<VoteLog>(std::move(votes_path), manifest_.lambdas);

  // Replay: every observer with votes under this seed gets its session back.
  std::set<std::string> observers;
  for (const auto& v : votes_->snapshot()) {
    if (v.session_id == session_id_for(v.observer_id)) observers.insert(v.observer_id);
  }
  for (const auto& o : observers) open_session(o);
}

std::string StudyService::keyed_hash(std::string_view message) const {
  unsigned char out[16];
  crypto_generichash(out, sizeof(out), reinterpret_cast<const unsigned char*>(message.data()), message.size(),
                     key_.data(), key_.size());
  return to_hex(out, sizeof(out));
}

std::string StudyService::session_id_for(const std::string& observer_id) const {
  return keyed_hash("session\n" + observer_id);
}

std::string StudyService::image_token(const std::string& session_id, std::size_t pair_index,
                                      std::string_view side) const {
  return keyed_hash("image\n" + session_id + "\n" + std::to_string(pair_index) + "\n" + std::string(side));
}

StudyService::Session& StudyService::open_session(const std::string& observer_id) {
  std::unique_lock lock(sessions_mutex_);
  if (const auto it = by_observer_.find(observer_id); it != by_observer_.end()) return *sessions_.at(it->second);

  auto s = std::make_unique<Session>();
  s->id = session_id_for(observer_id);
  s->observer_id = observer_id;
  s->schedule = schedule_pairs(manifest_, observer_id, seed_);
  votes_->register_session(s->id, observer_id, s->schedule);
  while (s->cursor < s->schedule.size() && votes_->answer(s->id, s->schedule[s->cursor])) ++s->cursor;

  {
    std::unique_lock tlock(tokens_mutex_);
    for (std::size_t i = 0; i < s->schedule.size(); ++i) {
      const auto& pair = s->schedule[i];
      const auto* entry = manifest_.find(pair.reference_id);
      auto distorted_path = [&](double lambda) {
        const auto it = std::find_if(entry->distorted.begin(), entry->distorted.end(),
                                     [&](const DistortedImage& d) { return d.lambda == lambda; });
        return manifest_.resolve(it->path);
      };
      tokens_[image_token(s->id, i, "left")] = distorted_path(pair.left_lambda);
      tokens_[image_token(s->id, i, "right")] = distorted_path(pair.right_lambda);
      tokens_[image_token(s->id, i, "reference")] = manifest_.resolve(entry->ref_path);
    }
  }
  by_observer_[observer_id] = s->id;
  auto& ref = *s;
  sessions_[s->id] = std::move(s);
  return ref;
}

StudyService::Session* StudyService::find_session(const std::string& session_id) {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : it->second.get();
}

ApiResponse StudyService::create_session(std::string_view body) {
  std::string observer;
  try {
    const auto j = json::parse(body);
    if (j.contains("observer_id") && j["observer_id"].is_string()) observer = j["observer_id"].get<std::string>();
  } catch (const json::exception&) {
    return error_response(400, "request body must be JSON with an observer_id");
  }
  if (trim(observer).empty()) return error_response(400, "observer_id must not be empty");
  Session& s = open_session(observer);
  std::lock_guard lock(s.mutex);
  return json_response(200, {{"session_id", s.id}, {"total_pairs", s.schedule.size()}, {"cursor", s.cursor}});
}

ApiResponse StudyService::next_pair(const std::string& session_id) {
  Session* s = find_session(session_id);
  if (s == nullptr) return error_response(404, "unknown session");
  std::lock_guard lock(s->mutex);
  if (s->cursor >= s->schedule.size()) {
    return json_response(200, {{"done", true}, {"total_pairs", s->schedule.size()}});
  }
  const auto url = [&](std::string_view side) { return "/api/images/" + image_token(s->id, s->cursor, side); };
  return json_response(200, {{"pair_index", s->cursor},
                             {"total_pairs", s->schedule.size()},
                             {"left_image_url", url("left")},
                             {"right_image_url", url("right")},
                             {"reference_image_url", url("reference")}});
}

ApiResponse StudyService::submit_vote(const std::string& session_id, std::string_view body) {
  Session* s = find_session(session_id);
  if (s == nullptr) return error_response(404, "unknown session");
  std::int64_t index = -1;
  std::optional<Side> winner;
  try {
    const auto j = json::parse(body);
    if (j.contains("pair_index") && j["pair_index"].is_number_integer()) index = j["pair_index"].get<std::int64_t>();
    if (j.contains("winner") && j["winner"].is_string()) winner = parse_side(j["winner"].get<std::string>());
  } catch (const json::exception&) {
    return error_response(400, "request body must be JSON");
  }
  if (index < 0) return error_response(400, "pair_index must be a non-negative integer");
  if (!winner) return error_response(400, "winner must be 'left' or 'right'");

  std::lock_guard lock(s->mutex);
  const auto total = s->schedule.size();
  const auto pos = static_cast<std::size_t>(index);
  if (pos >= total) return error_response(409, "pair_index is beyond the schedule");
  if (pos > s->cursor) return error_response(409, "pair_index is ahead of the session cursor");

  const auto& pair = s->schedule[pos];
  if (pos < s->cursor) {
    if (votes_->answer(s->id, pair) != winner) return error_response(409, "pair already answered with a different winner");
    return json_response(200, {{"accepted", true}, {"duplicate", true}, {"progress", progress_json(s->cursor, total)}});
  }
  VoteRecord vote{s->observer_id, s->id, pair.reference_id, pair.left_lambda, pair.right_lambda, *winner,
                  utc_timestamp_now()};
  try {
    const auto outcome = votes_->record(vote);
    ++s->cursor;
    return json_response(200, {{"accepted", true},
                               {"duplicate", outcome == RecordOutcome::Duplicate},
                               {"progress", progress_json(s->cursor, total)}});
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Conflict) return error_response(409, "pair already answered with a different winner");
    if (e.kind() == ErrorKind::Io) return error_response(500, "vote could not be stored");
    return error_response(400, "vote rejected");
  }
}

ApiResponse StudyService::image(const std::string& token) const {
  std::filesystem::path path;
  {
    std::shared_lock lock(tokens_mutex_);
    const auto it = tokens_.find(token);
    if (it == tokens_.end()) return error_response(404, "unknown image");
    path = it->second;
  }
  try {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return {200, read_text_file(path), ext == ".pgm" ? "image/x-portable-graymap" : "image/png"};
  } catch (const Error&) {
    return error_response(404, "image unavailable");
  }
}

ApiResponse StudyService::progress() const {
  std::shared_lock lock(sessions_mutex_);
  json list = json::array();
  for (const auto& [observer, id] : by_observer_) {
    Session& s = *sessions_.at(id);
    std::lock_guard slock(s.mutex);
    list.push_back({{"observer_id", observer},
                    {"answered", s.cursor},
                    {"total", s.schedule.size()},
                    {"done", s.cursor == s.schedule.size()}});
  }
  return json_response(200, list);
}

}  // namespace dsiqa
