#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sanet/errors.hpp"

namespace sanet {

/// One sensor event: timestamp in microseconds since stream start, pixel
/// coordinates, polarity in {-1, +1}.
struct EventRecord {
  uint64_t t_us = 0;
  uint16_t x = 0;
  uint16_t y = 0;
  int8_t p = 1;

  bool operator==(const EventRecord&) const = default;
};

/// Time-ordered event sequence plus sensor resolution.
struct EventStream {
  uint16_t width = 0;
  uint16_t height = 0;
  std::vector<EventRecord> events;

  bool operator==(const EventStream&) const = default;
};

/// Per-pixel event counts of one accumulation window.
struct CountFrame {
  int width = 0;
  int height = 0;
  long long window_index = 0;
  uint64_t window_us = 0;
  std::vector<uint32_t> counts;  // row-major height * width

  uint64_t total() const {
    uint64_t s = 0;
    for (uint32_t c : counts) s += c;
    return s;
  }
};

/// Parses an event file, sniffing the container: binary streams start with
/// the magic "DVE1" (u16 width, u16 height, then packed records
/// {u64 t_us, u16 x, u16 y, i8 p}, little-endian); anything else is parsed
/// as CSV with the exact header line `t_us,x,y,p`. CSV carries no
/// resolution, so it is taken from `resolution` when given and inferred as
/// (max_x + 1, max_y + 1) otherwise.
/// Validates bounds, polarity and nondecreasing timestamps.
EventStream parse_events(const std::string& path,
                         std::optional<std::pair<uint16_t, uint16_t>>
                             resolution = std::nullopt);

EventStream parse_events_binary(std::istream& in);
EventStream parse_events_csv(std::istream& in,
                             std::optional<std::pair<uint16_t, uint16_t>>
                                 resolution = std::nullopt);

void write_events_binary(std::ostream& out, const EventStream& stream);
void write_events_csv(std::ostream& out, const EventStream& stream);
void write_events_binary(const std::string& path, const EventStream& stream);
void write_events_csv(const std::string& path, const EventStream& stream);

/// Splits the stream into half-open windows [i*dt, (i+1)*dt) and counts
/// events per pixel, ignoring polarity. A nonempty stream yields
/// ceil((t_last + 1)/dt) frames; an empty stream yields none.
std::vector<CountFrame> accumulate(const EventStream& stream, uint64_t dt_us);

/// Polarity-split variant: .first counts ON (+1) events, .second OFF (-1).
std::pair<std::vector<CountFrame>, std::vector<CountFrame>> accumulate_split(
    const EventStream& stream, uint64_t dt_us);

/// 8-bit rendering: pixel = round(255 * min(count, clip) / clip).
std::vector<uint8_t> normalize_frame(const CountFrame& frame, int clip = 3);

}  // namespace sanet
