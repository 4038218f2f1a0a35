#include "fil/protocol/message.hpp"

#include <algorithm>
#include <cstring>

#include "fil/nn/serialize.hpp"

namespace fil::protocol {

namespace {

using Reader = ByteReaderT<ProtocolError>;

void put_string(ByteWriter& w, std::string_view s) {
  if (s.size() > 0xffff) throw ArgumentError("string field longer than 65535 bytes");
  w.u16(static_cast<std::uint16_t>(s.size()));
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::string get_string(Reader& r) {
  const auto n = r.u16();
  const auto raw = r.raw(n);
  return std::string(raw.begin(), raw.end());
}

void put_params(ByteWriter& w, const nn::PolicyModel& model) {
  const auto blob = nn::serialize_params(model);
  w.u32(static_cast<std::uint32_t>(blob.size()));
  w.raw(blob);
}

nn::PolicyModel get_params(Reader& r) {
  const auto n = r.u32();
  const auto at = r.offset();
  const auto blob = r.raw(n);
  try {
    return nn::deserialize_params(blob);
  } catch (const Error& e) {
    throw ProtocolError(std::string("parameter field is not a valid FILP blob: ") + e.what(), at);
  }
}

Modality get_modality(Reader& r) {
  const auto at = r.offset();
  const auto m = modality_from_tag(r.u8());
  if (!m) throw ProtocolError("unknown modality tag", at);
  return *m;
}

Bytes payload_of(const Message& m) {
  ByteWriter w;
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Hello> || std::is_same_v<T, RequestGuide>) {
          put_string(w, msg.robot_id);
          w.u8(static_cast<std::uint8_t>(msg.modality));
        } else if constexpr (std::is_same_v<T, UploadParams>) {
          put_string(w, msg.robot_id);
          w.u32(msg.round);
          put_params(w, msg.model);
        } else if constexpr (std::is_same_v<T, Ack>) {
          w.u32(msg.round);
        } else if constexpr (std::is_same_v<T, Guide>) {
          w.u32(msg.fusion_round);
          put_params(w, msg.model);
        } else {
          w.u16(static_cast<std::uint16_t>(msg.code));
          put_string(w, msg.text);
        }
      },
      m);
  return w.take();
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unsupported_type: return "unsupported_type";
    case ErrorCode::malformed: return "malformed";
    case ErrorCode::no_guide_available: return "no_guide_available";
    case ErrorCode::duplicate_robot: return "duplicate_robot";
    case ErrorCode::not_registered: return "not_registered";
    case ErrorCode::stale_version: return "stale_version";
    case ErrorCode::modality_mismatch: return "modality_mismatch";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

MessageType type_of(const Message& m) {
  return static_cast<MessageType>(m.index() + 1);
}

Bytes encode(const Message& m) {
  const auto payload = payload_of(m);
  if (payload.size() > kMaxPayload) throw ArgumentError("message payload exceeds the frame limit");
  ByteWriter w;
  w.tag("FILM");
  w.u16(kProtocolVersion);
  w.u8(static_cast<std::uint8_t>(type_of(m)));
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  return w.take();
}

FrameHeader decode_header(std::span<const std::uint8_t> header) {
  Reader r(header.first(std::min(header.size(), kHeaderSize)));
  r.expect_tag("FILM");
  FrameHeader h;
  const auto ver_at = r.offset();
  h.version = r.u16();
  if (h.version != kProtocolVersion)
    throw ProtocolError("unsupported protocol version " + std::to_string(h.version), ver_at);
  h.type = r.u8();
  const auto len_at = r.offset();
  h.length = r.u32();
  if (h.length > kMaxPayload)
    throw ProtocolError("declared payload length " + std::to_string(h.length) + " exceeds limit",
                        len_at);
  return h;
}

Message decode_payload(std::uint8_t type, std::span<const std::uint8_t> payload) {
  Reader r(payload, kHeaderSize);
  Message out;
  switch (static_cast<MessageType>(type)) {
    case MessageType::hello: {
      Hello m;
      m.robot_id = get_string(r);
      m.modality = get_modality(r);
      out = std::move(m);
      break;
    }
    case MessageType::upload_params: {
      UploadParams m;
      m.robot_id = get_string(r);
      m.round = r.u32();
      m.model = get_params(r);
      out = std::move(m);
      break;
    }
    case MessageType::ack: out = Ack{r.u32()}; break;
    case MessageType::request_guide: {
      RequestGuide m;
      m.robot_id = get_string(r);
      m.modality = get_modality(r);
      out = std::move(m);
      break;
    }
    case MessageType::guide: {
      Guide m;
      m.fusion_round = r.u32();
      m.model = get_params(r);
      out = std::move(m);
      break;
    }
    case MessageType::error: {
      ErrorReply m;
      m.code = static_cast<ErrorCode>(r.u16());
      m.text = get_string(r);
      out = std::move(m);
      break;
    }
    default: throw UnsupportedType(type, 6);
  }
  if (!r.done()) throw ProtocolError("trailing bytes in payload", r.offset());
  return out;
}

Message decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < kHeaderSize)
    throw ProtocolError("truncated frame header: " + std::to_string(frame.size()) + " bytes",
                        frame.size());
  const auto h = decode_header(frame);
  const std::size_t have = frame.size() - kHeaderSize;
  if (have < h.length)
    throw ProtocolError("declared length " + std::to_string(h.length) + " exceeds the " +
                            std::to_string(have) + " payload bytes present",
                        frame.size());
  if (have > h.length)
    throw ProtocolError("bytes after the declared payload", kHeaderSize + h.length);
  return decode_payload(h.type, frame.subspan(kHeaderSize));
}

std::optional<std::size_t> find_magic(std::span<const std::uint8_t> data, std::size_t from) {
  static constexpr std::uint8_t magic[4] = {'F', 'I', 'L', 'M'};
  if (from >= data.size()) return std::nullopt;
  const auto it = std::search(data.begin() + static_cast<std::ptrdiff_t>(from), data.end(),
                              std::begin(magic), std::end(magic));
  if (it == data.end()) return std::nullopt;
  return static_cast<std::size_t>(it - data.begin());
}

}  // namespace fil::protocol
