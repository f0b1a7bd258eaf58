#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "sanet/events.hpp"
#include "sanet/rng.hpp"

using namespace sanet;

namespace {

EventStream make_stream(uint16_t w, uint16_t h,
                        std::initializer_list<EventRecord> records) {
  EventStream stream;
  stream.width = w;
  stream.height = h;
  stream.events = records;
  return stream;
}

EventStream random_stream(int n, uint16_t w, uint16_t h, Rng& rng) {
  EventStream stream;
  stream.width = w;
  stream.height = h;
  uint64_t t = 0;
  for (int i = 0; i < n; ++i) {
    t += rng.below(5000);
    stream.events.push_back(EventRecord{
        t, static_cast<uint16_t>(rng.below(w)),
        static_cast<uint16_t>(rng.below(h)),
        static_cast<int8_t>(rng.bernoulli(0.5) ? 1 : -1)});
  }
  return stream;
}

std::string to_binary(const EventStream& stream) {
  std::ostringstream out;
  write_events_binary(out, stream);
  return out.str();
}

std::string to_csv(const EventStream& stream) {
  std::ostringstream out;
  write_events_csv(out, stream);
  return out.str();
}

}  // namespace

TEST_CASE("binary container round trip") {
  Rng rng(1);
  const EventStream stream = random_stream(100, 320, 240, rng);
  const std::string bytes = to_binary(stream);
  std::istringstream in(bytes);
  const EventStream parsed = parse_events_binary(in);
  CHECK(parsed == stream);
  CHECK(to_binary(parsed) == bytes);
}

TEST_CASE("empty payload after the header is an empty stream") {
  EventStream empty = make_stream(64, 48, {});
  std::istringstream in(to_binary(empty));
  const EventStream parsed = parse_events_binary(in);
  CHECK(parsed.events.empty());
  CHECK(parsed.width == 64);
}

TEST_CASE("binary format errors") {
  std::istringstream bad_magic("NOPE....");
  CHECK_THROWS_AS(parse_events_binary(bad_magic), FormatError);

  EventStream stream = make_stream(10, 10, {EventRecord{5, 1, 1, 1}});
  std::string bytes = to_binary(stream);
  bytes.pop_back();  // truncate one byte
  std::istringstream truncated(bytes);
  CHECK_THROWS_AS(parse_events_binary(truncated), FormatError);
}

TEST_CASE("record validation names the offending index") {
  // x == width is out of bounds at record 0
  EventStream bad = make_stream(8, 8, {EventRecord{0, 8, 0, 1}});
  std::istringstream in(to_binary(bad));
  try {
    parse_events_binary(in);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("record 0") != std::string::npos);
  }

  EventStream unsorted =
      make_stream(8, 8, {EventRecord{10, 1, 1, 1}, EventRecord{5, 1, 1, 1}});
  std::istringstream in2(to_binary(unsorted));
  CHECK_THROWS_AS(parse_events_binary(in2), DataError);

  EventStream bad_polarity = make_stream(8, 8, {EventRecord{0, 1, 1, 0}});
  std::istringstream in3(to_binary(bad_polarity));
  CHECK_THROWS_AS(parse_events_binary(in3), DataError);
}

TEST_CASE("csv round trips through the binary writer bit-identically") {
  const std::string csv = "t_us,x,y,p\n100,3,4,1\n250,0,7,-1\n250,5,5,1\n";
  std::istringstream in(csv);
  const EventStream stream = parse_events_csv(in, {{16, 16}});
  CHECK(stream.events.size() == 3);

  const std::string bytes1 = to_binary(stream);
  std::istringstream bin_in(bytes1);
  const EventStream reparsed = parse_events_binary(bin_in);
  CHECK(to_binary(reparsed) == bytes1);
  CHECK(to_csv(reparsed) == csv);
}

TEST_CASE("csv header and resolution rules") {
  std::istringstream bad_header("time,x,y,p\n1,2,3,1\n");
  CHECK_THROWS_AS(parse_events_csv(bad_header), FormatError);

  std::istringstream infer("t_us,x,y,p\n5,9,3,1\n");
  const EventStream stream = parse_events_csv(infer);
  CHECK(stream.width == 10);
  CHECK(stream.height == 4);
}

TEST_CASE("accumulate window arithmetic") {
  SUBCASE("empty stream yields zero frames") {
    CHECK(accumulate(make_stream(4, 4, {}), 30000).empty());
  }
  SUBCASE("three events inside one 30 ms window") {
    EventStream stream = make_stream(4, 4,
                                     {EventRecord{0, 0, 0, 1},
                                      EventRecord{10000, 1, 2, -1},
                                      EventRecord{29999, 1, 2, 1}});
    const auto frames = accumulate(stream, 30000);
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].counts[0] == 1);
    CHECK(frames[0].counts[2 * 4 + 1] == 2);
    CHECK(frames[0].total() == 3);
  }
  SUBCASE("an event at exactly t = dt opens frame 1") {
    EventStream stream = make_stream(4, 4, {EventRecord{30000, 0, 0, 1}});
    const auto frames = accumulate(stream, 30000);
    REQUIRE(frames.size() == 2);
    CHECK(frames[0].total() == 0);
    CHECK(frames[1].total() == 1);
  }
  SUBCASE("frame count is ceil((t_last + 1)/dt)") {
    for (uint64_t t_last : {0ULL, 29999ULL, 30000ULL, 90000ULL, 90001ULL}) {
      EventStream stream = make_stream(2, 2, {EventRecord{t_last, 0, 0, 1}});
      const auto frames = accumulate(stream, 30000);
      CHECK(frames.size() == (t_last + 1 + 29999) / 30000);
    }
  }
  CHECK_THROWS_AS(accumulate(make_stream(2, 2, {}), 0), ConfigError);
}

TEST_CASE("event conservation and polarity invariance") {
  Rng rng(7);
  const EventStream stream = random_stream(500, 64, 48, rng);
  const auto frames = accumulate(stream, 25000);
  uint64_t total = 0;
  for (const auto& frame : frames) total += frame.total();
  CHECK(total == stream.events.size());

  EventStream flipped = stream;
  for (auto& rec : flipped.events) rec.p = static_cast<int8_t>(-rec.p);
  const auto frames_flipped = accumulate(flipped, 25000);
  REQUIRE(frames_flipped.size() == frames.size());
  for (size_t i = 0; i < frames.size(); ++i)
    CHECK(frames[i].counts == frames_flipped[i].counts);

  // polarity-split mode conserves events per polarity
  const auto [on, off] = accumulate_split(stream, 25000);
  uint64_t split_total = 0;
  for (const auto& frame : on) split_total += frame.total();
  for (const auto& frame : off) split_total += frame.total();
  CHECK(split_total == stream.events.size());
}

TEST_CASE("normalize_frame clipping") {
  CountFrame frame;
  frame.width = 3;
  frame.height = 1;
  frame.counts = {0, 1, 7};
  const auto image = normalize_frame(frame, 3);
  CHECK(image[0] == 0);
  CHECK(image[1] == 85);  // round(255/3)
  CHECK(image[2] == 255);
  CHECK_THROWS_AS(normalize_frame(frame, 0), ConfigError);
}
