#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dsiqa/dataset.hpp"
#include "dsiqa/subjective.hpp"

namespace dsiqa {

/// Transport-independent HTTP response.
struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Pairwise-comparison study state: sessions are derived from the manifest,
/// the observer id, and the server seed; the vote log is the only mutable
/// store, and replaying it on construction restores every session cursor.
class StudyService {
 public:
  StudyService(DatasetManifest manifest, std::optional<std::filesystem::path> votes_path, std::uint64_t seed);

  ApiResponse create_session(std::string_view body);
  ApiResponse next_pair(const std::string& session_id);
  ApiResponse submit_vote(const std::string& session_id, std::string_view body);
  ApiResponse image(const std::string& token) const;
  ApiResponse progress() const;

  const VoteLog& votes() const noexcept { return *votes_; }

 private:
  struct Session {
    std::string id;
    std::string observer_id;
    std::vector<ScheduledPair> schedule;
    std::size_t cursor = 0;
    std::mutex mutex;
  };

  std::string keyed_hash(std::string_view message) const;
  std::string session_id_for(const std::string& observer_id) const;
  std::string image_token(const std::string& session_id, std::size_t pair_index, std::string_view side) const;
  Session& open_session(const std::string& observer_id);
  Session* find_session(const std::string& session_id);

  DatasetManifest manifest_;
  std::uint64_t seed_;
  std::vector<unsigned char> key_;
  std::unique_ptr<VoteLog> votes_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;  // by session id
  std::map<std::string, std::string> by_observer_;            // observer id -> session id

  mutable std::shared_mutex tokens_mutex_;
  std::map<std::string, std::filesystem::path> tokens_;
};

/// Binds StudyService to an HTTP listener (all endpoints under /api, static
/// assets at /).
class HttpServer {
 public:
  HttpServer(std::shared_ptr<StudyService> service, std::optional<std::filesystem::path> static_dir);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Starts listening on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dsiqa
