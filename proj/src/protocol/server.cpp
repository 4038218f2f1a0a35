#include "fil/protocol/server.hpp"

#include <iostream>

#include "fil/common/errors.hpp"
#include "fil/sim/observation.hpp"

namespace fil::protocol {

namespace {

ErrorReply error(ErrorCode code, std::string text) { return ErrorReply{code, std::move(text)}; }

}  // namespace

std::string_view to_string(FusionMode mode) {
  return mode == FusionMode::synchronous ? "sync" : "async";
}

std::optional<FusionMode> parse_mode(std::string_view name) {
  if (name == "sync" || name == "synchronous") return FusionMode::synchronous;
  if (name == "async" || name == "asynchronous") return FusionMode::asynchronous;
  return std::nullopt;
}

void ServerConfig::validate() const {
  if (robots < 1) throw ArgumentError("server needs robots >= 1");
  if (frequency < 1) throw ArgumentError("server needs frequency >= 1");
  if (async_period.count() <= 0) throw ArgumentError("async period must be positive");
  nn::validate_policy_spec(guide_spec);
  guide_cfg.validate();
}

CloudServer::CloudServer(ServerConfig cfg, fusion::SceneBank bank)
    : cfg_(std::move(cfg)), bank_(std::move(bank)), last_fusion_time_(Clock::now()) {
  cfg_.validate();
  if (bank_.empty()) throw StateError("cloud server needs a non-empty scene bank");
  bank_.validate();
}

CloudServer::~CloudServer() {
  wait_idle();
  std::lock_guard lock(mu_);
  if (worker_.joinable()) worker_.join();
}

Message CloudServer::handle(Session& session, const Message& request) {
  try {
    if (const auto* m = std::get_if<Hello>(&request)) return on_hello(session, *m);
    if (const auto* m = std::get_if<UploadParams>(&request)) return on_upload(session, *m);
    if (const auto* m = std::get_if<RequestGuide>(&request)) return on_request_guide(session, *m);
    return error(ErrorCode::unsupported_type, "clients may not send this message type");
  } catch (const Error& e) {
    return error(ErrorCode::internal, e.what());
  }
}

Message CloudServer::handle_frame(Session& session, std::span<const std::uint8_t> frame) {
  Message request;
  try {
    request = decode(frame);
  } catch (const UnsupportedType& e) {
    return error(ErrorCode::unsupported_type, e.what());
  } catch (const ProtocolError& e) {
    return error(ErrorCode::malformed, e.what());
  }
  return handle(session, request);
}

void CloudServer::close(Session& session) {
  std::lock_guard lock(mu_);
  if (session.robot_id) connected_.erase(*session.robot_id);
  session.robot_id.reset();
}

Message CloudServer::on_hello(Session& s, const Hello& m) {
  if (m.robot_id.empty()) return error(ErrorCode::malformed, "empty robot id");
  std::lock_guard lock(mu_);
  if (s.robot_id) {
    if (*s.robot_id == m.robot_id && s.modality == m.modality) return Ack{last_round_[m.robot_id]};
    return error(ErrorCode::duplicate_robot, "session already identified as " + *s.robot_id);
  }
  if (connected_.count(m.robot_id))
    return error(ErrorCode::duplicate_robot, "robot " + m.robot_id + " is already connected");
  if (const auto held = registry_.find(m.robot_id); held && held->model.modality != m.modality)
    return error(ErrorCode::modality_mismatch,
                 "robot " + m.robot_id + " previously uploaded " +
                     std::string(to_string(held->model.modality)) + " parameters");
  connected_.insert(m.robot_id);
  s.robot_id = m.robot_id;
  s.modality = m.modality;
  const auto it = last_round_.find(m.robot_id);
  return Ack{it == last_round_.end() ? 0u : it->second};
}

Message CloudServer::on_upload(Session& s, const UploadParams& m) {
  if (!s.robot_id || *s.robot_id != m.robot_id)
    return error(ErrorCode::not_registered, "upload for robot " + m.robot_id +
                                                " on a session without a matching HELLO");
  if (m.model.modality != s.modality)
    return error(ErrorCode::modality_mismatch, "uploaded model modality differs from HELLO");
  if (m.model.input_dim() != sim::kGridCells)
    return error(ErrorCode::malformed, "model input dimension is not the grid size");

  std::lock_guard lock(mu_);
  const auto last = last_round_.find(m.robot_id);
  if (last != last_round_.end() && m.round < last->second)
    return error(ErrorCode::stale_version, "round " + std::to_string(m.round) +
                                               " is older than " + std::to_string(last->second));
  fusion::UploadOutcome outcome;
  try {
    outcome = registry_.upload(m.robot_id, m.model, m.round);
  } catch (const StateError& e) {
    return error(ErrorCode::stale_version, e.what());
  }
  if (outcome == fusion::UploadOutcome::duplicate) return Ack{m.round};

  last_round_[m.robot_id] = m.round;
  ++uploads_since_fusion_;
  auto& uploaded = round_uploads_[m.round];
  uploaded.insert(m.robot_id);
  if (cfg_.mode == FusionMode::synchronous && m.round > 0 &&
      m.round % static_cast<std::uint32_t>(cfg_.frequency) == 0 &&
      m.round > last_fused_upload_round_ && uploaded.size() >= static_cast<std::size_t>(cfg_.robots))
    schedule_fusion_locked(m.round);
  return Ack{m.round};
}

Message CloudServer::on_request_guide(Session& s, const RequestGuide& m) {
  if (!s.robot_id || *s.robot_id != m.robot_id)
    return error(ErrorCode::not_registered, "guide request from robot " + m.robot_id +
                                                " on a session without a matching HELLO");
  std::uint32_t round;
  std::vector<fusion::PseudoLabel> labels;
  {
    std::lock_guard lock(mu_);
    round = fusion_round_;
    if (round == 0) return error(ErrorCode::no_guide_available, "no fusion round has completed");
    labels = labels_;
  }
  std::lock_guard guide_lock(guide_mu_);
  const auto key = std::make_pair(m.modality, round);
  auto it = guide_cache_.find(key);
  if (it == guide_cache_.end()) {
    auto trained = fusion::train_guide(m.modality, bank_, labels, cfg_.guide_spec, cfg_.guide_cfg);
    // Labels of older rounds are gone; so are their guides.
    std::erase_if(guide_cache_, [&](const auto& kv) { return kv.first.second < round; });
    it = guide_cache_.emplace(key, std::move(trained.model)).first;
    ++guides_trained_;
  }
  return Guide{it->second, round};
}

void CloudServer::schedule_fusion_locked(std::uint32_t upload_round) {
  last_fused_upload_round_ = std::max(last_fused_upload_round_, upload_round);
  uploads_since_fusion_ = 0;
  last_fusion_time_ = Clock::now();
  pending_.push_back({upload_round, registry_.snapshot()});
  if (fusing_) return;
  fusing_ = true;
  // The previous worker has left its loop once fusing_ was cleared.
  if (worker_.joinable()) worker_.join();
  worker_ = std::thread([this] { fusion_worker(); });
}

void CloudServer::fusion_worker() {
  for (;;) {
    PendingFusion job;
    std::uint32_t round;
    {
      std::lock_guard lock(mu_);
      if (pending_.empty()) {
        fusing_ = false;
        idle_cv_.notify_all();
        return;
      }
      job = std::move(pending_.front());
      pending_.erase(pending_.begin());
      round = fusion_round_ + 1;
    }
    try {
      auto labels = fusion::fuse_round(job.snapshot, bank_, round, cfg_.aggregator);
      FusionEvent ev{round, job.upload_round, labels.front().contributors};
      std::lock_guard lock(mu_);
      fusion_round_ = round;
      labels_ = std::move(labels);
      events_.push_back(std::move(ev));
    } catch (const Error& e) {
      std::cerr << "fusion round " << round << " failed: " << e.what() << '\n';
    }
  }
}

bool CloudServer::tick(Clock::time_point now) {
  if (cfg_.mode != FusionMode::asynchronous) return false;
  std::lock_guard lock(mu_);
  if (uploads_since_fusion_ == 0 || now - last_fusion_time_ < cfg_.async_period) return false;
  schedule_fusion_locked(0);
  last_fusion_time_ = now;
  return true;
}

void CloudServer::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return !fusing_; });
}

std::vector<FusionEvent> CloudServer::fusion_events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::uint32_t CloudServer::fusion_round() const {
  std::lock_guard lock(mu_);
  return fusion_round_;
}

std::vector<fusion::PseudoLabel> CloudServer::labels() const {
  std::lock_guard lock(mu_);
  return labels_;
}

std::size_t CloudServer::guides_trained() const {
  std::lock_guard lock(guide_mu_);
  return guides_trained_;
}

}  // namespace fil::protocol
