#include "sanet/events.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace sanet {
namespace {

constexpr char kMagic[4] = {'D', 'V', 'E', '1'};
constexpr size_t kRecordBytes = 13;  // u64 + u16 + u16 + i8, packed

template <typename T>
T read_le(const uint8_t* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<uint8_t*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

template <typename T>
void write_le(std::string& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<uint8_t*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void validate_record(const EventStream& stream, const EventRecord& rec,
                     size_t index, uint64_t prev_t) {
  if (rec.x >= stream.width || rec.y >= stream.height)
    throw DataError("event record " + std::to_string(index) +
                    ": coordinate out of sensor bounds");
  if (rec.p != 1 && rec.p != -1)
    throw DataError("event record " + std::to_string(index) +
                    ": polarity must be -1 or +1");
  if (index > 0 && rec.t_us < prev_t)
    throw DataError("event record " + std::to_string(index) +
                    ": timestamps must be nondecreasing");
}

}  // namespace

EventStream parse_events_binary(std::istream& in) {
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("event file: bad magic");
  const auto* p = reinterpret_cast<const uint8_t*>(bytes.data());
  EventStream stream;
  stream.width = read_le<uint16_t>(p + 4);
  stream.height = read_le<uint16_t>(p + 6);
  if (stream.width == 0 || stream.height == 0)
    throw FormatError("event file: zero sensor resolution");
  const size_t payload = bytes.size() - 8;
  if (payload % kRecordBytes != 0)
    throw FormatError("event file: truncated record payload");
  const size_t count = payload / kRecordBytes;
  stream.events.reserve(count);
  uint64_t prev_t = 0;
  for (size_t i = 0; i < count; ++i) {
    const uint8_t* r = p + 8 + i * kRecordBytes;
    EventRecord rec;
    rec.t_us = read_le<uint64_t>(r);
    rec.x = read_le<uint16_t>(r + 8);
    rec.y = read_le<uint16_t>(r + 10);
    rec.p = static_cast<int8_t>(r[12]);
    validate_record(stream, rec, i, prev_t);
    prev_t = rec.t_us;
    stream.events.push_back(rec);
  }
  return stream;
}

EventStream parse_events_csv(
    std::istream& in, std::optional<std::pair<uint16_t, uint16_t>> resolution) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("event csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,x,y,p")
    throw FormatError("event csv: expected header 't_us,x,y,p'");

  std::vector<EventRecord> records;
  size_t index = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    EventRecord rec;
    long long t, x, y, p;
    char c1, c2, c3;
    std::istringstream row(line);
    if (!(row >> t >> c1 >> x >> c2 >> y >> c3 >> p) || c1 != ',' ||
        c2 != ',' || c3 != ',' || t < 0 || x < 0 || y < 0)
      throw FormatError("event csv: malformed record " + std::to_string(index));
    rec.t_us = static_cast<uint64_t>(t);
    if (x > 0xFFFF || y > 0xFFFF)
      throw DataError("event csv: coordinate exceeds 16-bit range at record " +
                      std::to_string(index));
    rec.x = static_cast<uint16_t>(x);
    rec.y = static_cast<uint16_t>(y);
    rec.p = static_cast<int8_t>(p);
    records.push_back(rec);
    ++index;
  }

  EventStream stream;
  if (resolution) {
    stream.width = resolution->first;
    stream.height = resolution->second;
  } else {
    uint32_t w = 1, h = 1;
    for (const auto& rec : records) {
      w = std::max<uint32_t>(w, static_cast<uint32_t>(rec.x) + 1);
      h = std::max<uint32_t>(h, static_cast<uint32_t>(rec.y) + 1);
    }
    if (w > 0xFFFF || h > 0xFFFF)
      throw DataError("event csv: inferred resolution exceeds 16-bit range");
    stream.width = static_cast<uint16_t>(w);
    stream.height = static_cast<uint16_t>(h);
  }
  uint64_t prev_t = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    validate_record(stream, records[i], i, prev_t);
    prev_t = records[i].t_us;
  }
  stream.events = std::move(records);
  return stream;
}

EventStream parse_events(
    const std::string& path,
    std::optional<std::pair<uint16_t, uint16_t>> resolution) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open event file: " + path);
  std::array<char, 4> head{};
  in.read(head.data(), 4);
  const bool binary =
      in.gcount() == 4 && std::memcmp(head.data(), kMagic, 4) == 0;
  in.clear();
  in.seekg(0);
  return binary ? parse_events_binary(in) : parse_events_csv(in, resolution);
}

void write_events_binary(std::ostream& out, const EventStream& stream) {
  std::string bytes;
  bytes.reserve(8 + stream.events.size() * kRecordBytes);
  bytes.append(kMagic, 4);
  write_le<uint16_t>(bytes, stream.width);
  write_le<uint16_t>(bytes, stream.height);
  for (const auto& rec : stream.events) {
    write_le<uint64_t>(bytes, rec.t_us);
    write_le<uint16_t>(bytes, rec.x);
    write_le<uint16_t>(bytes, rec.y);
    bytes.push_back(static_cast<char>(rec.p));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_events_csv(std::ostream& out, const EventStream& stream) {
  out << "t_us,x,y,p\n";
  for (const auto& rec : stream.events)
    out << rec.t_us << ',' << rec.x << ',' << rec.y << ','
        << static_cast<int>(rec.p) << '\n';
}

void write_events_binary(const std::string& path, const EventStream& stream) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write event file: " + path);
  write_events_binary(out, stream);
}

void write_events_csv(const std::string& path, const EventStream& stream) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write event file: " + path);
  write_events_csv(out, stream);
}

namespace {

std::vector<CountFrame> make_frames(const EventStream& stream, uint64_t dt_us) {
  if (dt_us == 0) throw ConfigError("accumulate: window length must be positive");
  if (stream.events.empty()) return {};
  const uint64_t t_last = stream.events.back().t_us;
  const uint64_t n_frames = (t_last + 1 + dt_us - 1) / dt_us;
  std::vector<CountFrame> frames(static_cast<size_t>(n_frames));
  for (size_t i = 0; i < frames.size(); ++i) {
    frames[i].width = stream.width;
    frames[i].height = stream.height;
    frames[i].window_index = static_cast<long long>(i);
    frames[i].window_us = dt_us;
    frames[i].counts.assign(
        static_cast<size_t>(stream.width) * stream.height, 0);
  }
  return frames;
}

}  // namespace

std::vector<CountFrame> accumulate(const EventStream& stream, uint64_t dt_us) {
  auto frames = make_frames(stream, dt_us);
  for (const auto& rec : stream.events) {
    auto& frame = frames[static_cast<size_t>(rec.t_us / dt_us)];
    ++frame.counts[static_cast<size_t>(rec.y) * stream.width + rec.x];
  }
  return frames;
}

std::pair<std::vector<CountFrame>, std::vector<CountFrame>> accumulate_split(
    const EventStream& stream, uint64_t dt_us) {
  auto on = make_frames(stream, dt_us);
  auto off = make_frames(stream, dt_us);
  for (const auto& rec : stream.events) {
    auto& frames = rec.p > 0 ? on : off;
    auto& frame = frames[static_cast<size_t>(rec.t_us / dt_us)];
    ++frame.counts[static_cast<size_t>(rec.y) * stream.width + rec.x];
  }
  return {std::move(on), std::move(off)};
}

std::vector<uint8_t> normalize_frame(const CountFrame& frame, int clip) {
  if (clip < 1) throw ConfigError("normalize_frame: clip must be >= 1");
  std::vector<uint8_t> image(frame.counts.size());
  for (size_t i = 0; i < frame.counts.size(); ++i) {
    const uint32_t clamped =
        std::min(frame.counts[i], static_cast<uint32_t>(clip));
    image[i] = static_cast<uint8_t>(
        std::llround(255.0 * clamped / static_cast<double>(clip)));
  }
  return image;
}

}  // namespace sanet
