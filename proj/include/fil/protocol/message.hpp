#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "fil/common/bytes.hpp"
#include "fil/common/modality.hpp"
#include "fil/nn/model.hpp"

namespace fil::protocol {

// Frame: "FILM" | version u16 | type u8 | payload length u32 | payload.
inline constexpr std::uint16_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 11;
inline constexpr std::uint32_t kMaxPayload = 16u << 20;

enum class MessageType : std::uint8_t {
  hello = 1,
  upload_params = 2,
  ack = 3,
  request_guide = 4,
  guide = 5,
  error = 6,
};

enum class ErrorCode : std::uint16_t {
  unsupported_type = 1,
  malformed = 2,
  no_guide_available = 3,
  duplicate_robot = 4,
  not_registered = 5,
  stale_version = 6,
  modality_mismatch = 7,
  internal = 8,
};

std::string_view to_string(ErrorCode code);

// Parameter-carrying messages hold a PolicyModel, never raw bytes: on the wire
// the field is a FILP blob and decoding rejects anything else.
struct Hello {
  std::string robot_id;
  Modality modality = Modality::occupancy;
  bool operator==(const Hello&) const = default;
};
struct UploadParams {
  std::string robot_id;
  std::uint32_t round = 0;
  nn::PolicyModel model;
  bool operator==(const UploadParams&) const = default;
};
struct Ack {
  std::uint32_t round = 0;
  bool operator==(const Ack&) const = default;
};
struct RequestGuide {
  std::string robot_id;
  Modality modality = Modality::occupancy;
  bool operator==(const RequestGuide&) const = default;
};
struct Guide {
  nn::PolicyModel model;
  std::uint32_t fusion_round = 0;
  bool operator==(const Guide&) const = default;
};
struct ErrorReply {
  ErrorCode code = ErrorCode::internal;
  std::string text;
  bool operator==(const ErrorReply&) const = default;
};

using Message = std::variant<Hello, UploadParams, Ack, RequestGuide, Guide, ErrorReply>;

MessageType type_of(const Message& m);

struct FrameHeader {
  std::uint16_t version = kProtocolVersion;
  std::uint8_t type = 0;
  std::uint32_t length = 0;
};

Bytes encode(const Message& m);

// Header checks: magic, version, length bound. Throws ProtocolError.
FrameHeader decode_header(std::span<const std::uint8_t> header);

// Payload of a known type; throws ProtocolError on malformed content or an
// unknown type (UnsupportedType). Error offsets are relative to the frame.
Message decode_payload(std::uint8_t type, std::span<const std::uint8_t> payload);

// One complete frame, exact length. Throws ProtocolError.
Message decode(std::span<const std::uint8_t> frame);

class UnsupportedType : public ProtocolError {
 public:
  UnsupportedType(std::uint8_t type, std::size_t offset)
      : ProtocolError("unsupported message type " + std::to_string(type), offset), type_(type) {}
  std::uint8_t type() const { return type_; }

 private:
  std::uint8_t type_;
};

// Offset of the next "FILM" magic at or after `from`, if any. Used to resync
// a stream after a frame with a bad header.
std::optional<std::size_t> find_magic(std::span<const std::uint8_t> data, std::size_t from = 0);

}  // namespace fil::protocol
