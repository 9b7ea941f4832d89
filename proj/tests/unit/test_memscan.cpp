#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support.hpp"
#include "d2wfp/corpus.hpp"
#include "d2wfp/memscan.hpp"

using namespace d2wfp;
using namespace d2wfp::memscan;
using testing::TempDir;

namespace {

const std::string kOnionV3 = "2gzyxa5ihm7nsggfxnu52rck2vv4rvmdlkiu3zzui5du4xyclen53wid";
const std::string kOnionV2 = "expyuzz4wqqyqhjn";

Bytes utf16(std::string_view s) {
  Bytes out;
  for (char c : s) {
    out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(0);
  }
  return out;
}

void plant(Bytes& dump, std::size_t offset, const Bytes& what) { std::copy(what.begin(), what.end(), dump.begin() + offset); }

void plant(Bytes& dump, std::size_t offset, std::string_view what) {
  std::copy(what.begin(), what.end(), dump.begin() + offset);
}

std::vector<ScanHit> with_pattern(const std::vector<ScanHit>& hits, std::string_view p) {
  std::vector<ScanHit> out;
  std::copy_if(hits.begin(), hits.end(), std::back_inserter(out), [&](const ScanHit& h) { return h.pattern == p; });
  return out;
}

}  // namespace

TEST_CASE("onion URL at a known offset") {
  Bytes dump(16384, 0);
  const std::string url = "http://" + kOnionV3 + ".onion/";
  plant(dump, 4096, url);
  const auto hits = scan(dump);
  const auto urls = with_pattern(hits, "url");
  const auto onions = with_pattern(hits, "onion_v3");
  REQUIRE(urls.size() == 1);
  REQUIRE(onions.size() == 1);
  CHECK(urls[0].offset == 4096);
  CHECK(urls[0].text == url);
  CHECK(onions[0].offset == 4096 + 7);
  CHECK(onions[0].text == kOnionV3 + ".onion");
  CHECK(hits.size() == 2);
}

TEST_CASE("all-zero dump has no hits") { CHECK(scan(Bytes(1 << 16, 0)).empty()); }

TEST_CASE("UTF-16LE search query") {
  Bytes dump(8192, 0);
  plant(dump, 1000, utf16("duckduckgo q=buy%20passport"));
  const auto hits = with_pattern(scan(dump), "search_query");
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].encoding == HitEncoding::Utf16le);
  CHECK(hits[0].text == "q=buy%20passport");
  CHECK(hits[0].offset == 1000 + 2 * 11);
  const auto arts = classify_hits(hits, "E1", "mem.raw");
  REQUIRE(arts.size() == 1);
  CHECK(arts[0].value == "buy passport");
  CHECK(arts[0].kind == ArtifactKind::SearchQueries);
}

TEST_CASE("v2 onions, emails and keywords") {
  Bytes dump(8192, 0);
  plant(dump, 100, kOnionV2 + ".onion");
  plant(dump, 300, "mail alice@example.org now");
  plant(dump, 600, "TorBrowser");
  const auto hits = scan(dump);
  CHECK(with_pattern(hits, "onion_v2").size() == 1);
  const auto email = with_pattern(hits, "email");
  REQUIRE(email.size() == 1);
  CHECK(email[0].text == "alice@example.org");
  CHECK(with_pattern(hits, "keyword").size() == 1);
}

TEST_CASE("context_window") {
  Bytes dump(256, 'a');
  dump[0] = 0x00;
  dump[1] = 0x01;
  CHECK(context_window(dump, 0, 16, 0).size() == 16);
  CHECK(context_window(dump, 0, 16, 0).substr(0, 2) == "..");
  CHECK(context_window(dump, 100, 16, 10).size() == 2 * 16 + 10);
  CHECK(context_window(dump, 250, 16, 6).size() == 16 + 6);
  const Bytes bin{0x00, 0x01};
  CHECK(context_window(bin, 0, 0, 2) == "..");
}

TEST_CASE("classify_hits") {
  Bytes dump(8192, 0);
  plant(dump, 10, kOnionV3 + ".onion");
  plant(dump, 200, "bob@mail.example.com ");
  const auto arts = classify_hits(scan(dump), "E2", "mem.raw");
  REQUIRE(arts.size() == 2);
  const auto url = std::find_if(arts.begin(), arts.end(), [](const Artifact& a) { return a.kind == ArtifactKind::Urls; });
  REQUIRE(url != arts.end());
  CHECK(url->location == Location::Ram);
  CHECK(url->recovery_state == RecoveryState::MemoryResident);
  const auto mail =
      std::find_if(arts.begin(), arts.end(), [](const Artifact& a) { return a.kind == ArtifactKind::EmailAddresses; });
  REQUIRE(mail != arts.end());
  CHECK(mail->location == Location::Ram);
  CHECK(classify_hits({}, "E2", "mem.raw").empty());
}

TEST_CASE("an onion inside a URL is folded into the URL artifact") {
  Bytes dump(4096, 0);
  plant(dump, 64, "http://" + kOnionV3 + ".onion/forum");
  const auto arts = classify_hits(scan(dump), "E1", "m");
  REQUIRE(arts.size() == 1);
  CHECK(arts[0].value == "http://" + kOnionV3 + ".onion/forum");
}

TEST_CASE("chunked scan equals whole-buffer scan, plants straddling chunk edges") {
  std::mt19937_64 rng(5);
  const std::size_t chunk = 4096;
  Bytes dump(chunk * 16);
  for (auto& b : dump) b = static_cast<std::uint8_t>(rng() % 4 == 0 ? rng() : 0);
  std::vector<std::size_t> planted;
  for (std::size_t edge = chunk; edge < dump.size(); edge += chunk) {
    const std::string url = "http://" + kOnionV3 + ".onion/p" + std::to_string(edge);
    const std::size_t at = edge - 1 - rng() % (url.size() - 2);
    if (edge % (2 * chunk) == 0) {
      plant(dump, at, utf16(url));
    } else {
      plant(dump, at, url);
    }
    dump[at - 1] = 0;
    planted.push_back(at);
  }
  ScanOptions small;
  small.chunk_size = chunk;
  const auto whole = scan(dump);
  const auto chunked = scan_chunked(dump, {}, small);
  CHECK(whole == chunked);
  const auto urls = with_pattern(chunked, "url");
  for (auto at : planted) {
    const bool found = std::any_of(urls.begin(), urls.end(), [&](const ScanHit& h) { return h.offset == at; });
    CHECK(found);
  }

  TempDir dir;
  testing::write_bytes(dir / "m.raw", testing::bytes_to_string(dump));
  CHECK(scan_file(dir / "m.raw", {}, small) == whole);
}

TEST_CASE("generated memory dump plants are found") {
  TempDir dir;
  corpus::CorpusSpec spec;
  spec.memory_size = 1 << 20;
  spec.memory_plants.push_back({"http://" + kOnionV3 + ".onion/", 4096, corpus::Encoding::Ascii});
  spec.memory_plants.push_back({"http://" + kOnionV3 + ".onion/edge", (1 << 18) - 9, corpus::Encoding::Utf16le});
  corpus::generate_memory_dump(spec, dir / "m.raw");
  ScanOptions o;
  o.chunk_size = 1 << 18;
  const auto urls = with_pattern(scan_file(dir / "m.raw", {}, o), "url");
  REQUIRE(urls.size() == 2);
  CHECK(urls[0].offset == 4096);
  CHECK(urls[1].offset == (1 << 18) - 9);
  CHECK(urls[1].encoding == HitEncoding::Utf16le);

  corpus::CorpusSpec none;
  none.memory_size = 1 << 16;
  corpus::generate_memory_dump(none, dir / "z.raw");
  CHECK(scan_file(dir / "z.raw").empty());
}
