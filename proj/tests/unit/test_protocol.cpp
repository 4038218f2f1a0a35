#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <thread>

#include "doctest.h"
#include "fil/common/errors.hpp"
#include "fil/nn/serialize.hpp"
#include "fil/protocol/transport.hpp"
#include "fil/sim/dataset_io.hpp"

using namespace fil;
using namespace fil::protocol;
using namespace std::chrono_literals;

namespace {

const fusion::SceneBank& bank() {
  static const auto b = fusion::build_scene_bank(std::vector<std::int64_t>{21, 22}, 20);
  return b;
}

nn::PolicyModel model_for(Modality m, std::uint64_t seed, std::uint32_t version) {
  auto model = nn::init_model(nn::default_policy_spec(), seed, m);
  model.version = version;
  return model;
}

ServerConfig small_config() {
  ServerConfig cfg;
  cfg.guide_cfg.epochs = 3;
  cfg.guide_cfg.batch_size = 16;
  return cfg;
}

template <class T>
const T& as(const Message& m) {
  REQUIRE(std::holds_alternative<T>(m));
  return std::get<T>(m);
}

ErrorCode error_code(const Message& m) { return as<ErrorReply>(m).code; }

const std::string kRobots[] = {"r0", "r1", "r2"};
const Modality kModalities[] = {Modality::occupancy, Modality::distance, Modality::semantic};

bool contains(const Bytes& hay, std::string_view needle) {
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

TEST_CASE("every message type round-trips") {
  const std::vector<Message> all = {
      Hello{"robot-a", Modality::semantic},
      UploadParams{"robot-a", 4, model_for(Modality::distance, 5, 4)},
      Ack{17},
      RequestGuide{"robot-b", Modality::occupancy},
      Guide{model_for(Modality::occupancy, 6, 2), 2},
      ErrorReply{ErrorCode::stale_version, "old"},
  };
  for (const auto& m : all) {
    const auto bytes = encode(m);
    CHECK(bytes.size() >= kHeaderSize);
    CHECK(std::memcmp(bytes.data(), "FILM", 4) == 0);
    CHECK(bytes[6] == static_cast<std::uint8_t>(type_of(m)));
    const std::uint32_t len = bytes[7] | bytes[8] << 8 | bytes[9] << 16 | bytes[10] << 24;
    CHECK(len == bytes.size() - kHeaderSize);
    CHECK(decode(bytes) == m);
  }
}

TEST_CASE("framing errors") {
  const auto good = encode(Hello{"robot-a", Modality::distance});

  SUBCASE("declared length beyond the bytes") {
    const Bytes cut(good.begin(), good.end() - 1);
    CHECK_THROWS_AS(decode(cut), ProtocolError);
    const Bytes header_only(good.begin(), good.begin() + kHeaderSize);
    CHECK_THROWS_AS(decode(header_only), ProtocolError);
  }
  SUBCASE("trailing bytes") {
    auto longer = good;
    longer.push_back(0);
    CHECK_THROWS_AS(decode(longer), ProtocolError);
  }
  SUBCASE("bad magic, version and length bound") {
    auto bad = good;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_header(bad), ProtocolError);
    bad = good;
    bad[4] = 9;
    CHECK_THROWS_AS(decode_header(bad), ProtocolError);
    bad = good;
    bad[10] = 0x7F;
    CHECK_THROWS_AS(decode_header(bad), ProtocolError);
  }
  SUBCASE("unknown type") {
    auto bad = good;
    bad[6] = 0xFF;
    CHECK_THROWS_AS(decode(bad), UnsupportedType);
  }
  SUBCASE("error offsets point into the frame") {
    auto bad = good;
    bad[kHeaderSize + 2 + 7] = 9;  // modality byte after the 7-char id
    try {
      decode(bad);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.offset() >= kHeaderSize);
      CHECK(e.offset() <= bad.size());
    }
  }
  SUBCASE("parameter fields accept only FILP") {
    const sim::Demonstration rec{};
    const auto dataset = sim::encode_dataset(Modality::distance, std::span(&rec, 1));
    ByteWriter w;
    w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("FILM"), 4));
    w.u16(kProtocolVersion);
    w.u8(static_cast<std::uint8_t>(MessageType::upload_params));
    const std::string id = "r0";
    w.u32(static_cast<std::uint32_t>(2 + id.size() + 4 + 4 + dataset.size()));
    w.u16(static_cast<std::uint16_t>(id.size()));
    w.raw(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(id.data()), id.size()));
    w.u32(1);
    w.u32(static_cast<std::uint32_t>(dataset.size()));
    w.raw(dataset);
    CHECK_THROWS_AS(decode(w.bytes()), ProtocolError);
  }
  SUBCASE("find_magic") {
    Bytes stream = {1, 2, 'F', 'I'};
    stream.insert(stream.end(), good.begin(), good.end());
    CHECK(find_magic(stream) == 4);
    CHECK_FALSE(find_magic(std::span(stream).first(6)).has_value());
  }
}

TEST_CASE("server replies with ERROR codes") {
  CloudServer server(small_config(), bank());
  Session a, b;

  auto frame = encode(Hello{"r0", Modality::occupancy});
  frame[6] = 0xFF;
  CHECK(error_code(server.handle_frame(a, frame)) == ErrorCode::unsupported_type);
  frame = encode(Hello{"r0", Modality::occupancy});
  frame.pop_back();
  CHECK(error_code(server.handle_frame(a, frame)) == ErrorCode::malformed);

  CHECK(error_code(server.handle(a, UploadParams{"r0", 1, model_for(Modality::occupancy, 1, 1)})) ==
        ErrorCode::not_registered);
  CHECK(error_code(server.handle(a, RequestGuide{"r0", Modality::occupancy})) ==
        ErrorCode::not_registered);
  CHECK(error_code(server.handle(a, Ack{1})) == ErrorCode::unsupported_type);

  CHECK(as<Ack>(server.handle(a, Hello{"r0", Modality::occupancy})).round == 0);
  CHECK(std::holds_alternative<Ack>(server.handle(a, Hello{"r0", Modality::occupancy})));
  CHECK(error_code(server.handle(b, Hello{"r0", Modality::occupancy})) ==
        ErrorCode::duplicate_robot);
  CHECK(error_code(server.handle(a, Hello{"r9", Modality::occupancy})) ==
        ErrorCode::duplicate_robot);

  CHECK(error_code(server.handle(a, RequestGuide{"r0", Modality::occupancy})) ==
        ErrorCode::no_guide_available);
  CHECK(error_code(server.handle(a, UploadParams{"r0", 1, model_for(Modality::semantic, 1, 1)})) ==
        ErrorCode::modality_mismatch);
  CHECK(error_code(server.handle(a, UploadParams{"r1", 1, model_for(Modality::occupancy, 1, 1)})) ==
        ErrorCode::not_registered);

  CHECK(as<Ack>(server.handle(a, UploadParams{"r0", 2, model_for(Modality::occupancy, 1, 2)})).round == 2);
  CHECK(error_code(server.handle(a, UploadParams{"r0", 1, model_for(Modality::occupancy, 2, 1)})) ==
        ErrorCode::stale_version);
  CHECK(error_code(server.handle(a, UploadParams{"r0", 2, model_for(Modality::occupancy, 3, 2)})) ==
        ErrorCode::stale_version);

  // The id is free again once its session closes, but the modality sticks.
  server.close(a);
  CHECK(error_code(server.handle(b, Hello{"r0", Modality::distance})) ==
        ErrorCode::modality_mismatch);
  CHECK(as<Ack>(server.handle(b, Hello{"r0", Modality::occupancy})).round == 2);
}

TEST_CASE("synchronous schedule fuses every f rounds") {
  for (int f : {1, 2, 3, 4}) {
    CAPTURE(f);
    auto cfg = small_config();
    cfg.frequency = f;
    CloudServer server(cfg, bank());
    Session sessions[3];
    for (int r = 0; r < 3; ++r) server.handle(sessions[r], Hello{kRobots[r], kModalities[r]});
    for (std::uint32_t t = 1; t <= 6; ++t) {
      for (int r = 0; r < 3; ++r) {
        const auto m = model_for(kModalities[r], 100 * t + r, t);
        CHECK(std::holds_alternative<Ack>(server.handle(sessions[r], UploadParams{kRobots[r], t, m})));
        if (r < 2) {
          server.wait_idle();
          CHECK(server.fusion_events().size() == (t - 1) / f);
        }
      }
    }
    server.wait_idle();
    const auto events = server.fusion_events();
    REQUIRE(events.size() == static_cast<std::size_t>(6 / f));
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(events[i].fusion_round == i + 1);
      CHECK(events[i].upload_round == (i + 1) * f);
      REQUIRE(events[i].contributors.size() == 3);
      for (const auto& c : events[i].contributors) CHECK(c.version == (i + 1) * f);
    }
    CHECK(server.fusion_round() == events.size());
  }
}

TEST_CASE("duplicate uploads are idempotent") {
  auto cfg = small_config();
  cfg.frequency = 2;
  CloudServer server(cfg, bank());
  Session sessions[3];
  for (int r = 0; r < 3; ++r) server.handle(sessions[r], Hello{kRobots[r], kModalities[r]});
  for (std::uint32_t t = 1; t <= 2; ++t)
    for (int r = 0; r < 3; ++r)
      server.handle(sessions[r], UploadParams{kRobots[r], t, model_for(kModalities[r], 10 * t + r, t)});
  server.wait_idle();
  const auto registry_before = server.registry().snapshot();
  const auto labels_before = server.labels();
  REQUIRE(server.fusion_events().size() == 1);

  for (int r = 0; r < 3; ++r) {
    const auto again = server.handle(sessions[r], UploadParams{kRobots[r], 2, model_for(kModalities[r], 20 + r, 2)});
    CHECK(as<Ack>(again).round == 2);
  }
  server.wait_idle();
  const auto registry_after = server.registry().snapshot();
  REQUIRE(registry_after.size() == registry_before.size());
  for (std::size_t i = 0; i < registry_after.size(); ++i) {
    CHECK(registry_after[i].digest == registry_before[i].digest);
    CHECK(registry_after[i].model == registry_before[i].model);
  }
  CHECK(server.fusion_events().size() == 1);
  CHECK(server.labels() == labels_before);
}

TEST_CASE("asynchronous fusion runs with the robots that uploaded") {
  auto cfg = small_config();
  cfg.mode = FusionMode::asynchronous;
  cfg.async_period = 1000ms;
  CloudServer server(cfg, bank());
  const auto t0 = CloudServer::Clock::now();
  CHECK_FALSE(server.tick(t0 + 5s));  // nothing uploaded yet

  Session sessions[2];
  std::vector<nn::PolicyModel> models;
  for (int r = 0; r < 2; ++r) {
    server.handle(sessions[r], Hello{kRobots[r], kModalities[r]});
    models.push_back(model_for(kModalities[r], 7 + r, 1));
    server.handle(sessions[r], UploadParams{kRobots[r], 1, models.back()});
  }
  server.wait_idle();
  CHECK(server.fusion_events().empty());  // uploads alone never fuse in async mode
  CHECK_FALSE(server.tick(t0));
  CHECK(server.tick(t0 + 5s));
  server.wait_idle();
  REQUIRE(server.fusion_events().size() == 1);
  CHECK(server.fusion_events()[0].contributors.size() == 2);

  // Median over two models is the mean of both predictions.
  const auto labels = server.labels();
  REQUIRE(labels.size() == bank().size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double a = nn::forward(models[0], bank().records[i].view(models[0].modality).values());
    const double b = nn::forward(models[1], bank().records[i].view(models[1].modality).values());
    CHECK(labels[i].label == doctest::Approx(0.5 * (a + b)).epsilon(1e-12));
  }
  CHECK_FALSE(server.tick(t0 + 60s));  // no upload since the last fusion
}

TEST_CASE("guides are trained on demand and cached per fusion round") {
  auto cfg = small_config();
  CloudServer server(cfg, bank());
  Session sessions[3];
  auto run_round = [&](std::uint32_t t) {
    for (int r = 0; r < 3; ++r) {
      server.handle(sessions[r], Hello{kRobots[r], kModalities[r]});
      server.handle(sessions[r], UploadParams{kRobots[r], t, model_for(kModalities[r], 30 * t + r, t)});
    }
    server.wait_idle();
  };
  run_round(1);
  const auto first = as<Guide>(server.handle(sessions[0], RequestGuide{"r0", Modality::occupancy}));
  CHECK(first.fusion_round == 1);
  CHECK(first.model.modality == Modality::occupancy);
  const auto local =
      fusion::train_guide(Modality::occupancy, bank(), server.labels(), cfg.guide_spec, cfg.guide_cfg);
  CHECK(nn::serialize_params(first.model) == nn::serialize_params(local.model));

  CHECK(as<Guide>(server.handle(sessions[1], RequestGuide{"r1", Modality::occupancy})) == first);
  CHECK(server.guides_trained() == 1);
  const auto sem = as<Guide>(server.handle(sessions[1], RequestGuide{"r1", Modality::semantic}));
  CHECK(sem.model.modality == Modality::semantic);
  CHECK(server.guides_trained() == 2);

  run_round(2);
  const auto second = as<Guide>(server.handle(sessions[0], RequestGuide{"r0", Modality::occupancy}));
  CHECK(second.fusion_round == 2);
  CHECK(server.guides_trained() == 3);
  CHECK_FALSE(second.model == first.model);
}

TEST_CASE("tcp session end to end") {
  std::mutex tap_mu;
  Bytes wire;
  std::vector<Bytes> upload_frames;
  Tap tap = [&](Direction dir, std::span<const std::uint8_t> bytes) {
    std::lock_guard lock(tap_mu);
    wire.insert(wire.end(), bytes.begin(), bytes.end());
    if (dir == Direction::to_server && bytes.size() > 6 &&
        bytes[6] == static_cast<std::uint8_t>(MessageType::upload_params))
      upload_frames.emplace_back(bytes.begin(), bytes.end());
  };

  auto cfg = small_config();
  cfg.frequency = 2;
  CloudServer server(cfg, bank());
  TcpServer tcp(server, parse_endpoint("127.0.0.1:0"));
  const auto ep = tcp.endpoint();
  CHECK(ep.port != 0);

  std::vector<std::unique_ptr<Client>> clients;
  for (int r = 0; r < 3; ++r) {
    clients.push_back(std::make_unique<Client>(ep, Client::kDefaultTimeout, tap));
    CHECK(clients[r]->hello(kRobots[r], kModalities[r]).round == 0);
  }
  try {
    clients[0]->request_guide("r0", Modality::occupancy);
    FAIL("expected RemoteError");
  } catch (const RemoteError& e) {
    CHECK(e.code() == ErrorCode::no_guide_available);
  }
  {
    Client dup(ep);
    CHECK_THROWS_AS(dup.hello("r1", Modality::distance), RemoteError);
  }

  std::vector<std::thread> threads;
  for (int r = 0; r < 3; ++r)
    threads.emplace_back([&, r] {
      for (std::uint32_t t = 1; t <= 4; ++t)
        clients[r]->upload(kRobots[r], t, model_for(kModalities[r], 50 * t + r, t));
    });
  for (auto& t : threads) t.join();
  server.wait_idle();
  CHECK(server.fusion_events().size() == 2);

  const auto guide = clients[2]->request_guide("r2", Modality::semantic);
  CHECK(guide.fusion_round == 2);
  const auto local =
      fusion::train_guide(Modality::semantic, bank(), server.labels(), cfg.guide_spec, cfg.guide_cfg);
  CHECK(nn::serialize_params(guide.model) == nn::serialize_params(local.model));

  SUBCASE("the connection survives garbage and unknown types") {
    const Bytes junk = {'x', 'y', 'z', 'F', 'I', 'L', 'M', 9, 9, 0, 0, 0, 0};
    clients[0]->send_bytes(junk);
    CHECK(error_code(clients[0]->receive()) == ErrorCode::malformed);
    auto unknown = encode(Ack{1});
    unknown[6] = 0xFF;
    clients[0]->send_bytes(unknown);
    // Depending on how the junk was split, one or two malformed replies precede.
    Message reply = clients[0]->receive();
    while (error_code(reply) == ErrorCode::malformed) reply = clients[0]->receive();
    CHECK(error_code(reply) == ErrorCode::unsupported_type);
    CHECK(clients[0]->hello("r0", Modality::occupancy).round == 4);
  }
  SUBCASE("a client killed mid-upload leaves the registry unchanged") {
    const auto before = server.registry().snapshot();
    const auto frame = encode(UploadParams{"r1", 5, model_for(Modality::distance, 999, 5)});
    clients[1]->send_bytes(std::span(frame).first(frame.size() / 2));
    clients[1]->close();
    // Reconnect under the same id once the server has dropped the old session.
    std::unique_ptr<Client> again;
    for (int attempt = 0; attempt < 200 && !again; ++attempt) {
      auto c = std::make_unique<Client>(ep);
      try {
        CHECK(c->hello("r1", Modality::distance).round == 4);
        again = std::move(c);
      } catch (const RemoteError& e) {
        CHECK(e.code() == ErrorCode::duplicate_robot);
        std::this_thread::sleep_for(10ms);
      }
    }
    REQUIRE(again);
    const auto after = server.registry().snapshot();
    REQUIRE(after.size() == before.size());
    for (std::size_t i = 0; i < after.size(); ++i) CHECK(after[i].digest == before[i].digest);
  }
  SUBCASE("wire capture holds parameters only") {
    std::lock_guard lock(tap_mu);
    CHECK(wire.size() > 0);
    CHECK_FALSE(contains(wire, "FILD"));
    CHECK_FALSE(contains(wire, "FILS"));
    REQUIRE(upload_frames.size() == 12);
    for (const auto& f : upload_frames) {
      const auto& up = as<UploadParams>(decode(f));
      // The params field is a FILP blob right after id and round.
      const std::size_t at = kHeaderSize + 2 + up.robot_id.size() + 4 + 4;
      CHECK(std::memcmp(f.data() + at, "FILP", 4) == 0);
      CHECK(nn::deserialize_params(std::span(f).subspan(at)) == up.model);
    }
  }
  tcp.stop();
}

TEST_CASE("client times out on a silent server") {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
  REQUIRE(::listen(fd, 4) == 0);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);

  Client c(Endpoint{"127.0.0.1", ntohs(addr.sin_port)}, 100ms);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(c.hello("r0", Modality::occupancy), TransportError);
  CHECK(std::chrono::steady_clock::now() - start >= 100ms);
  ::close(fd);

  CHECK_THROWS_AS(Client(Endpoint{"127.0.0.1", ntohs(addr.sin_port)}, 100ms), TransportError);
  CHECK_THROWS_AS(parse_endpoint("nohost"), ArgumentError);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), ArgumentError);
  CHECK(to_string(parse_endpoint("localhost:80")) == "localhost:80");
}
