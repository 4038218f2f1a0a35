#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "fil/fusion/fuse.hpp"
#include "fil/fusion/guide.hpp"
#include "fil/protocol/message.hpp"

namespace fil::protocol {

enum class FusionMode { synchronous, asynchronous };

std::string_view to_string(FusionMode mode);
std::optional<FusionMode> parse_mode(std::string_view name);

struct ServerConfig {
  int robots = 3;      // n
  int frequency = 1;   // f, in upload rounds
  FusionMode mode = FusionMode::synchronous;
  std::string listen = "127.0.0.1:0";
  std::chrono::milliseconds async_period{10000};
  fusion::Aggregator aggregator = fusion::Aggregator::median;
  nn::NetSpec guide_spec = nn::default_policy_spec();
  nn::TrainConfig guide_cfg = fusion::default_guide_config();

  void validate() const;
};

// Per-connection state. One robot id per session, set by HELLO.
struct Session {
  std::optional<std::string> robot_id;
  Modality modality = Modality::occupancy;
};

struct FusionEvent {
  std::uint32_t fusion_round = 0;  // 1, 2, ... in order of execution
  std::uint32_t upload_round = 0;  // sync mode: the round t that triggered it
  std::vector<fusion::Contributor> contributors;
};

// Transport-independent cloud logic. Requests from any number of sessions
// may be handled concurrently; state changes are serialized internally.
// Fusion runs on a registry snapshot in a worker thread, one round at a time.
class CloudServer {
 public:
  using Clock = std::chrono::steady_clock;

  CloudServer(ServerConfig cfg, fusion::SceneBank bank);
  ~CloudServer();
  CloudServer(const CloudServer&) = delete;
  CloudServer& operator=(const CloudServer&) = delete;

  Message handle(Session& session, const Message& request);

  // Decodes one frame and handles it; malformed frames and unknown types
  // produce an ERROR reply instead of an exception.
  Message handle_frame(Session& session, std::span<const std::uint8_t> frame);

  // Releases the session's robot id.
  void close(Session& session);

  // Async mode: fuses when the period has elapsed and an upload arrived since
  // the last fusion. Returns true if a fusion was started.
  bool tick(Clock::time_point now = Clock::now());

  // Blocks until no fusion is running or queued.
  void wait_idle();

  std::vector<FusionEvent> fusion_events() const;
  std::uint32_t fusion_round() const;
  std::vector<fusion::PseudoLabel> labels() const;
  const fusion::ModelRegistry& registry() const { return registry_; }
  const ServerConfig& config() const { return cfg_; }
  std::size_t guides_trained() const;

 private:
  Message on_hello(Session& s, const Hello& m);
  Message on_upload(Session& s, const UploadParams& m);
  Message on_request_guide(Session& s, const RequestGuide& m);

  struct PendingFusion {
    std::uint32_t upload_round = 0;
    std::vector<fusion::RegisteredModel> snapshot;
  };

  void schedule_fusion_locked(std::uint32_t upload_round);
  void fusion_worker();

  ServerConfig cfg_;
  fusion::SceneBank bank_;
  fusion::ModelRegistry registry_;

  mutable std::mutex mu_;
  std::condition_variable idle_cv_;
  std::set<std::string> connected_;
  std::map<std::string, std::uint32_t> last_round_;
  std::map<std::uint32_t, std::set<std::string>> round_uploads_;
  std::uint32_t last_fused_upload_round_ = 0;
  std::uint64_t uploads_since_fusion_ = 0;
  Clock::time_point last_fusion_time_;
  std::vector<PendingFusion> pending_;
  bool fusing_ = false;
  std::thread worker_;
  std::uint32_t fusion_round_ = 0;
  std::vector<fusion::PseudoLabel> labels_;
  std::vector<FusionEvent> events_;

  mutable std::mutex guide_mu_;  // serializes guide training, separate from mu_
  std::map<std::pair<Modality, std::uint32_t>, nn::PolicyModel> guide_cache_;
  std::size_t guides_trained_ = 0;
};

}  // namespace fil::protocol
