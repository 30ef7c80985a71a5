#pragma once

#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>

#include "qw/incremental.hpp"
#include "qw/residuals.hpp"

namespace httplib {
class Server;
}

namespace qw {

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string static_dir;
  ScoreOptions score;
  std::size_t cache_entries = 16;
  ModelHistory::Options history;
};

/// HTTP front end over a ModelHistory and one loaded frame. Score responses
/// are computed against a single model snapshot and stamped with its version.
class FeedbackService {
 public:
  FeedbackService(NormalityModel model, SensorFrame frame, ServiceOptions options);
  ~FeedbackService();

  FeedbackService(const FeedbackService&) = delete;
  FeedbackService& operator=(const FeedbackService&) = delete;

  /// Binds the listening socket; returns the bound port.
  int bind();
  /// Serves until stop(); bind() must have been called.
  void run();
  /// bind() + run() on a background thread.
  int start();
  void stop();

  const ModelHistory& history() const { return history_; }

 private:
  using TablePtr = std::shared_ptr<const ScoreTable>;
  struct CacheKey {
    std::uint64_t version;
    std::size_t first;
    std::size_t last;
    auto operator<=>(const CacheKey&) const = default;
  };

  void routes();
  TablePtr scores(const std::shared_ptr<const NormalityModel>& model, std::size_t first, std::size_t last);
  const Normalizers& normalizers_of(const NormalityModel& model) const;

  SensorFrame frame_;
  ServiceOptions options_;
  ModelHistory history_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  bool bound_ = false;

  std::mutex cache_mutex_;
  std::list<std::pair<CacheKey, TablePtr>> lru_;
  std::map<CacheKey, std::list<std::pair<CacheKey, TablePtr>>::iterator> index_;
};

/// Model with normalizers matching `score`, calibrating on `frame` if needed.
NormalityModel with_normalizers(NormalityModel model, const SensorFrame& frame, const ScoreOptions& score);

}  // namespace qw
