#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "detfactors/weather.h"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "detfactors/errors.h"
#include "detfactors/parallel.h"
#include "json.hpp"

namespace detfactors {

using json = nlohmann::json;

namespace {

double round2(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;
}

}  // namespace

WeatherQuery WeatherQuery::make(double lat, double lon, double timestamp) {
  const std::string rec = "weather query";
  if (!std::isfinite(lat) || lat < -90 || lat > 90) throw ValidationError(rec, "lat", "out of range");
  if (!std::isfinite(lon) || lon < -180 || lon > 180) throw ValidationError(rec, "lon", "out of range");
  if (!std::isfinite(timestamp)) throw ValidationError(rec, "timestamp", "not finite");
  WeatherQuery q;
  q.lat = round2(lat);
  q.lon = round2(lon);
  q.hour = static_cast<std::int64_t>(std::floor(timestamp / 3600.0)) * 3600;
  return q;
}

std::string WeatherQuery::key() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f,%.2f@%lld", lat, lon, static_cast<long long>(hour));
  return buf;
}

std::string WeatherQuery::cache_name() const { return sha256_hex(key()) + ".json"; }

std::string_view to_string(WeatherSource s) {
  switch (s) {
    case WeatherSource::kLive:
      return "live";
    case WeatherSource::kCache:
      return "cache";
    case WeatherSource::kFixture:
      return "fixture";
    case WeatherSource::kOff:
      return "off";
  }
  return "off";
}

WeatherSource parse_weather_source(std::string_view s) {
  if (s == "live") return WeatherSource::kLive;
  if (s == "cache") return WeatherSource::kCache;
  if (s == "fixture") return WeatherSource::kFixture;
  if (s == "off") return WeatherSource::kOff;
  throw ConfigError("weather source must be live, cache, fixture or off, got '" + std::string(s) + "'");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string api_key_from_env() {
  const char* v = std::getenv(kWeatherApiKeyEnv);
  return v ? std::string(v) : std::string();
}

HttplibTransport::HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttplibTransport::get(const std::string& url,
                                   const std::vector<std::pair<std::string, std::string>>& params) {
  HttpResponse out;
  const auto scheme_end = url.find("://");
  const auto host_end = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = url.substr(0, host_end);
  const std::string path = host_end == std::string::npos ? "/" : url.substr(host_end);
  httplib::Params query;
  for (const auto& [k, v] : params) query.emplace(k, v);
  try {
    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Get(path, query, httplib::Headers{});
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

namespace {

constexpr std::array<const char*, WeatherRecord::kFieldCount> kPayloadFields = {
    "temp", "dew", "humidity", "precip", "windspeed", "winddir",
    "pressure", "cloudcover", "solarradiation", "visibility", "uvindex"};

json record_to_json(const WeatherRecord& w) {
  json out = json::object();
  const auto values = w.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[kPayloadFields[i]] = std::isnan(values[i]) ? json(nullptr) : json(values[i]);
  }
  return out;
}

}  // namespace

WeatherRecord parse_weather_payload(std::string_view body, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw ParseError(origin, 0, e.what());
  }
  const json* src = &doc;
  if (doc.is_object() && doc.contains("currentConditions") && doc["currentConditions"].is_object()) {
    src = &doc["currentConditions"];
  }
  if (!src->is_object()) throw ParseError(origin, 0, "weather payload is not an object");
  std::array<double, WeatherRecord::kFieldCount> values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = kMissing;
    auto it = src->find(kPayloadFields[i]);
    if (it == src->end() || it->is_null()) continue;
    if (!it->is_number()) {
      throw ValidationError(origin, kPayloadFields[i], "expected a number, got " + it->dump());
    }
    values[i] = it->get<double>();
  }
  WeatherRecord w = WeatherRecord::from_values(values);
  validate(w, origin);
  return w;
}

WeatherClient::WeatherClient(WeatherClientOptions options, std::shared_ptr<HttpTransport> transport,
                             SleepFn sleep)
    : options_(std::move(options)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (options_.max_attempts < 1) throw ConfigError("weather max_attempts must be >= 1");
  if (options_.source == WeatherSource::kLive && !transport_) {
    transport_ = std::make_shared<HttplibTransport>();
  }
  if (options_.source == WeatherSource::kFixture) {
    std::ifstream in(options_.fixture_path);
    if (!in) throw ConfigError("cannot open weather fixture '" + options_.fixture_path.string() + "'");
    std::string line;
    std::size_t n = 0;
    const std::string origin = options_.fixture_path.string();
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json j = json::parse(line);
        const WeatherQuery q = WeatherQuery::make(j.at("lat").get<double>(), j.at("lon").get<double>(),
                                                  j.at("timestamp").get<double>());
        fixtures_[q.key()] = j.at("response").dump();
      } catch (const json::exception& e) {
        throw ParseError(origin, n, e.what());
      }
    }
  }
}

WeatherRecord WeatherClient::fetch(const WeatherQuery& query) {
  if (options_.source == WeatherSource::kOff) throw ContractError("weather source is off");
  if (options_.source == WeatherSource::kFixture) {
    auto it = fixtures_.find(query.key());
    if (it == fixtures_.end()) throw WeatherUnavailable("no fixture for " + query.key());
    return parse_weather_payload(it->second, "fixture " + query.key());
  }

  const std::string key = query.key();
  std::promise<WeatherRecord> promise;
  {
    std::unique_lock lock(inflight_mutex_);
    auto it = inflight_.find(key);
    if (it != inflight_.end()) {
      auto fut = it->second;
      lock.unlock();
      return fut.get();
    }
    inflight_.emplace(key, promise.get_future().share());
  }
  try {
    WeatherRecord r = resolve(query);
    promise.set_value(r);
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    return r;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(inflight_mutex_);
    inflight_.erase(key);
    throw;
  }
}

WeatherRecord WeatherClient::resolve(const WeatherQuery& query) {
  if (auto cached = read_cache(query)) {
    ++cache_hits_;
    return *cached;
  }
  if (options_.source == WeatherSource::kCache) {
    throw WeatherUnavailable("weather for " + query.key() + " is not cached");
  }
  WeatherRecord r = fetch_live(query);
  write_cache(query, r);
  return r;
}

std::optional<WeatherRecord> WeatherClient::read_cache(const WeatherQuery& query) {
  const auto path = options_.cache_dir / query.cache_name();
  std::shared_lock lock(cache_mutex_);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  if (!doc.contains("weather")) throw ParseError(path.string(), 0, "cache entry without 'weather'");
  return parse_weather_payload(doc["weather"].dump(), path.string());
}

void WeatherClient::write_cache(const WeatherQuery& query, const WeatherRecord& record) {
  const json doc = {{"query", query.key()}, {"weather", record_to_json(record)}};
  const auto path = options_.cache_dir / query.cache_name();
  std::unique_lock lock(cache_mutex_);
  std::filesystem::create_directories(options_.cache_dir);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump() << '\n';
    if (!out) throw Error("cannot write weather cache entry '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

WeatherRecord WeatherClient::fetch_live(const WeatherQuery& query) {
  if (options_.api_key.empty()) {
    throw ConfigError(std::string("live weather requires an API key in ") + kWeatherApiKeyEnv);
  }
  char lat[32], lon[32];
  std::snprintf(lat, sizeof lat, "%.2f", query.lat);
  std::snprintf(lon, sizeof lon, "%.2f", query.lon);
  const std::vector<std::pair<std::string, std::string>> params = {
      {"lat", lat}, {"lon", lon}, {"timestamp", std::to_string(query.hour)},
      {"key", options_.api_key}, {"unitGroup", "metric"}};
  std::string last;
  auto delay = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    ++upstream_calls_;
    const HttpResponse res = transport_->get(options_.base_url, params);
    if (res.status == 200) return parse_weather_payload(res.body, "weather service " + query.key());
    last = res.status == 0 ? res.error : "HTTP " + std::to_string(res.status);
    const bool retryable = res.status == 0 || res.status == 429 || res.status >= 500;
    if (!retryable) break;
    if (attempt < options_.max_attempts) {
      sleep_(delay);
      delay = std::min(delay * 2, options_.max_backoff);
    }
  }
  throw WeatherUnavailable("weather for " + query.key() + " unavailable: " + last);
}

std::size_t enrich_frames(std::vector<FrameMeta>& frames, WeatherClient& client, int workers) {
  parallel_for(frames.size(), workers, [&](std::size_t i) {
    FrameMeta& f = frames[i];
    f.weather = client.fetch(WeatherQuery::make(f.lat, f.lon, f.timestamp));
  });
  return frames.size();
}

}  // namespace detfactors
