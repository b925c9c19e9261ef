#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "detfactors/types.h"

namespace detfactors {

// Weather lookup key: coordinates rounded to 2 decimals, UTC time truncated to
// the hour.
struct WeatherQuery {
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t hour = 0;  // UTC seconds, multiple of 3600

  // Throws ValidationError for out-of-range coordinates or a non-finite time.
  static WeatherQuery make(double lat, double lon, double timestamp);

  std::string key() const;         // "lat,lon@hour"
  std::string cache_name() const;  // sha256(key) + ".json"
  bool operator==(const WeatherQuery&) const = default;
};

enum class WeatherSource { kLive, kCache, kFixture, kOff };

std::string_view to_string(WeatherSource s);
// Accepts live, cache, fixture, off. Throws ConfigError otherwise.
WeatherSource parse_weather_source(std::string_view s);

std::string sha256_hex(std::string_view data);

inline constexpr const char* kWeatherApiKeyEnv = "DETFACTORS_WEATHER_API_KEY";
inline constexpr const char* kDefaultWeatherUrl =
    "https://weather.visualcrossing.com/VisualCrossingWebServices/rest/services/timeline";

// Empty when the variable is unset.
std::string api_key_from_env();

struct HttpResponse {
  int status = 0;  // 0: the request never completed
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url,
                           const std::vector<std::pair<std::string, std::string>>& params) = 0;
};

// cpp-httplib client; one connection per request.
class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(20));
  HttpResponse get(const std::string& url,
                   const std::vector<std::pair<std::string, std::string>>& params) override;

 private:
  std::chrono::seconds timeout_;
};

// Maps a service response to a record. Field names are read from the top
// level or from a "currentConditions" object: temp, dew, humidity, precip,
// windspeed, winddir, pressure, cloudcover, solarradiation, visibility,
// uvindex. Absent or null fields become missing. Throws ParseError on
// malformed JSON and ValidationError when the record breaks an invariant.
WeatherRecord parse_weather_payload(std::string_view body, const std::string& origin);

struct WeatherClientOptions {
  WeatherSource source = WeatherSource::kCache;
  std::string base_url = kDefaultWeatherUrl;
  std::filesystem::path cache_dir = ".detfactors-cache/weather";
  std::filesystem::path fixture_path;  // JSONL: {"lat","lon","timestamp","response"}
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{4000};
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

// Cached weather lookups. Live mode consults the cache first, then the service
// with capped exponential backoff; validated responses are written to the
// cache atomically. Concurrent identical queries share one upstream request.
class WeatherClient {
 public:
  explicit WeatherClient(WeatherClientOptions options,
                         std::shared_ptr<HttpTransport> transport = nullptr, SleepFn sleep = {});

  // Throws WeatherUnavailable when no record can be obtained, ValidationError
  // for invalid payloads and ConfigError for a live query without an API key.
  WeatherRecord fetch(const WeatherQuery& query);

  std::size_t upstream_calls() const { return upstream_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }
  const WeatherClientOptions& options() const { return options_; }

 private:
  WeatherRecord resolve(const WeatherQuery& query);
  std::optional<WeatherRecord> read_cache(const WeatherQuery& query);
  void write_cache(const WeatherQuery& query, const WeatherRecord& record);
  WeatherRecord fetch_live(const WeatherQuery& query);

  WeatherClientOptions options_;
  std::shared_ptr<HttpTransport> transport_;
  SleepFn sleep_;
  std::map<std::string, std::string> fixtures_;  // query key -> response body
  std::shared_mutex cache_mutex_;
  std::mutex inflight_mutex_;
  std::map<std::string, std::shared_future<WeatherRecord>> inflight_;
  std::atomic<std::size_t> upstream_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

// Sets `weather` on every frame from the client. Returns the number of frames
// enriched.
std::size_t enrich_frames(std::vector<FrameMeta>& frames, WeatherClient& client, int workers = 1);

}  // namespace detfactors
