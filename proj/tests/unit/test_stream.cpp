#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "popvb/errors.hpp"
#include "popvb/stream.hpp"

using namespace popvb;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("popvb_test_" + name);
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("ordered minibatches") {
  auto s = StreamSource<int>::ordered({1, 2, 3, 4, 5});
  CHECK(s.finite());
  CHECK(s.next_minibatch(2) == std::vector<int>{1, 2});
  CHECK(s.next_minibatch(2) == std::vector<int>{3, 4});
  CHECK(s.next_minibatch(2) == std::vector<int>{5});
  CHECK(s.next_minibatch(2).empty());
  CHECK(s.delivered() == 5);
  CHECK_THROWS_AS(s.next_minibatch(0), std::invalid_argument);
}

TEST_CASE("held-out windows peek without consuming") {
  auto s = StreamSource<char>::ordered({'a', 'b', 'c', 'd'});
  CHECK(s.heldout_window(3) == std::vector<char>{'a', 'b', 'c'});
  CHECK(s.next_minibatch(2) == std::vector<char>{'a', 'b'});
  CHECK(s.heldout_window(0).empty());
  CHECK(s.heldout_window(10) == std::vector<char>{'c', 'd'});

  std::vector<int> data(50);
  std::iota(data.begin(), data.end(), 0);
  auto plain = StreamSource<int>::permuted(data, 7);
  auto peeked = StreamSource<int>::permuted(data, 7);
  std::vector<int> a;
  std::vector<int> b;
  for (int step = 0; step < 20; ++step) {
    for (int x : plain.next_minibatch(3)) a.push_back(x);
    const auto window = peeked.heldout_window(static_cast<std::size_t>(step % 5));
    const auto batch = peeked.next_minibatch(3);
    for (std::size_t i = 0; i < std::min(window.size(), batch.size()); ++i) CHECK(window[i] == batch[i]);
    for (int x : batch) b.push_back(x);
  }
  CHECK(a == b);
}

TEST_CASE("permuted streams") {
  std::vector<int> data(100);
  std::iota(data.begin(), data.end(), 0);
  auto s1 = StreamSource<int>::permuted(data, 7);
  auto s2 = StreamSource<int>::permuted(data, 7);
  const auto a = s1.next_minibatch(200);
  CHECK(a == s2.next_minibatch(200));
  CHECK(a != data);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == data);

  auto s3 = StreamSource<int>::permuted(data, 7);
  const auto peek = s3.heldout_window(5);
  CHECK(peek == std::vector<int>(a.begin(), a.begin() + 5));
}

TEST_CASE("empirical resampling") {
  auto s = StreamSource<int>::empirical_resample({0, 1, 2, 3}, 3);
  CHECK_FALSE(s.finite());
  std::vector<int> freq(4, 0);
  const int n = 100000;
  for (int i = 0; i < n / 100; ++i) {
    const auto b = s.next_minibatch(100);
    REQUIRE(b.size() == 100);
    for (int x : b) ++freq[x];
  }
  const double se = std::sqrt(n * 0.25 * 0.75);
  for (int f : freq) CHECK(std::abs(f - n * 0.25) < 3 * se);
  CHECK_THROWS_AS(StreamSource<int>::empirical_resample({}, 1), std::invalid_argument);
}

TEST_CASE("parse_corpus_line") {
  const auto d = parse_corpus_line("3:2 17:1", 8000);
  CHECK(d.distinct() == 2);
  CHECK(d.token_total() == 3);
  CHECK(d.words()[0] == WordCount{3, 2});
  CHECK(d.words()[1] == WordCount{17, 1});
  CHECK(parse_corpus_line("", 10).empty());
  CHECK(parse_corpus_line("  1:1\t2:4 \r", 10).token_total() == 5);

  try {
    parse_corpus_line("9999:1", 100);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("9999") != std::string::npos);
    CHECK(e.column() == 1);
  }
  for (const char* bad : {"1:0", "1:-2", "a:1", "1:", ":1", "1:1 1:2", "1;2", "1:2x", "-1:2", "1:99999999999"}) {
    CHECK_THROWS_AS(parse_corpus_line(bad, 100), ParseError);
  }
}

TEST_CASE("time_of_week") {
  // 1970-01-05 was a Monday.
  CHECK(time_of_week(345600) == 0.0);
  CHECK(time_of_week(345600 + 604800) == 0.0);
  CHECK(time_of_week(1609934400) == time_of_week(1609934400 + 604800));
  CHECK(time_of_week(345599) == doctest::Approx(604799.0 / 604800.0));

  // Wednesday 2021-01-06 12:00 UTC, located with the calendar library.
  using namespace std::chrono;
  const sys_days day = year{2021} / January / 6;
  const auto ts = duration_cast<seconds>((day + hours{12}).time_since_epoch()).count();
  const auto monday = day - (weekday{day} - Monday);
  const double expected = static_cast<double>(duration_cast<seconds>(day + hours{12} - monday).count()) / 604800.0;
  CHECK(time_of_week(ts) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(expected == doctest::Approx(60.0 / 168.0));
}

TEST_CASE("parse_location_line") {
  const auto obs = parse_location_line("u17,345600,5.35,-4.02");
  CHECK(obs == Observation{5.35, -4.02, 0.0});
  const auto r = parse_location_record("abc,1609934400,-90,180");
  CHECK(r.user_id == "abc");
  CHECK(r.timestamp == 1609934400);
  for (const char* bad : {"u,1,91,0", "u,1,0,-181", "u,x,0,0", "u,1,0", "u,1,0,0,0", "u,1.5,0,0", "u,1,nan,0", "u,1,0,"}) {
    CHECK_THROWS_AS(parse_location_line(bad), ParseError);
  }
}

TEST_CASE("corpus and location files") {
  const auto corpus = write_temp("corpus.txt", "0:1 2:3\n\n1:2\n");
  const auto docs = load_corpus(corpus, 3);
  REQUIRE(docs.size() == 3);
  CHECK(docs[1].empty());
  CHECK(docs[2].token_total() == 2);

  const auto bad = write_temp("bad.txt", "0:1\n0:1 5:1\n");
  try {
    load_corpus(bad, 3);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 5);
  }
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus", 3), IoError);

  const auto vocab = write_temp("vocab.txt", "apple\nbanana\ncherry\n");
  CHECK(load_vocabulary(vocab) == std::vector<std::string>{"apple", "banana", "cherry"});

  const auto loc = write_temp("loc.csv", "user_id,timestamp,lat,lon\nu1,100,1,2\nu1,200,1,2\nu2,150,3,4\nu1,1100,5,6\n");
  const auto records = load_locations(loc);
  REQUIRE(records.size() == 4);
  const auto kept = downsample_by_user(records, 900);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].timestamp == 100);
  CHECK(kept[1].user_id == "u2");
  CHECK(kept[2].timestamp == 1100);

  const auto headless = write_temp("headless.csv", "u1,100,1,2\n");
  CHECK_THROWS_AS(load_locations(headless), ParseError);
}

TEST_CASE("synthetic generators") {
  GaussianMixtureGenerator g;
  g.weights = {1.0};
  g.means = {0.0};
  g.stddev = {1.0};
  auto s = synthesize_stream(g, 4);
  CHECK_FALSE(s.finite());
  const int n = 100000;
  double sum = 0.0;
  for (const auto& x : s.next_minibatch(n)) sum += x[0];
  CHECK(std::abs(sum / n) < 3.0 / std::sqrt(static_cast<double>(n)));

  auto again = synthesize_stream(g, 4);
  auto other = synthesize_stream(g, 4);
  CHECK(again.next_minibatch(10) == other.next_minibatch(10));

  LdaGenerator lda;
  lda.num_topics = 1;
  lda.vocab_size = 5;
  lda.topics = {0.5, 0.0, 0.25, 0.25, 0.0};
  lda.mean_length = 20;
  auto docs = synthesize_stream(lda, 2);
  std::map<std::uint32_t, std::uint64_t> seen;
  for (const auto& d : docs.next_minibatch(500)) {
    CHECK(d.token_total() >= 1);
    for (const auto& wc : d.words()) seen[wc.id] += wc.count;
  }
  CHECK(seen.count(1) == 0);
  CHECK(seen.count(4) == 0);
  CHECK(seen.size() == 3);

  lda.topics = {0.5, 0.5, 0.5, 0.0, 0.0};
  CHECK_THROWS_AS(lda.validate(), std::invalid_argument);
}
