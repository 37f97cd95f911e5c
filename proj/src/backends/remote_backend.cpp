#include "vlmedge/backends/remote_backend.hpp"

#include <algorithm>
#include <regex>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vlmedge/backends/profile.hpp"
#include "vlmedge/common/base64.hpp"
#include "vlmedge/common/image.hpp"

namespace vlmedge::backends {

using nlohmann::json;

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  static const std::regex kUrl(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(options_.endpoint_url, m, kUrl)) {
    throw std::invalid_argument("remote endpoint must be an http:// URL: " + options_.endpoint_url);
  }
  scheme_host_port_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

InferenceOutput RemoteBackend::infer(const InferenceInput& input, StageObserver& observer) {
  const auto& q = input.query;
  json request{{"image", base64_encode(imaging::frame_as_jpeg(input.frame))},
               {"prompt", q.text},
               {"qtype", gateway::to_string(q.qtype)},
               {"params",
                {{"greedy", options_.decode.greedy},
                 {"max_new_tokens", options_.decode.max_new_tokens},
                 {"stop_on_eos", options_.decode.stop_on_eos}}}};
  if (!q.choices.empty()) request["choices"] = q.choices;

  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  const std::int64_t t0 = observer.now_us();
  observer.mark(gateway::Stage::Preprocess, t0);
  auto result = client.Post(path_, request.dump(), "application/json");
  const std::int64_t t1 = observer.now_us();

  if (!result) {
    const auto err = result.error();
    const bool timed_out = err == httplib::Error::Read &&
                           (t1 - t0) >= std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout).count() * 9 / 10;
    if (timed_out) {
      throw BackendError(BackendErrc::Timeout, "remote backend did not answer within " +
                                                   std::to_string(options_.timeout.count()) + " ms");
    }
    if (err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout) {
      throw BackendError(BackendErrc::RemoteUnreachable,
                         "cannot reach " + options_.endpoint_url + ": " + httplib::to_string(err));
    }
    throw BackendError(BackendErrc::RemoteError, "request to " + options_.endpoint_url +
                                                     " failed: " + httplib::to_string(err));
  }
  if (result->status < 200 || result->status >= 300) {
    throw BackendError(BackendErrc::RemoteError,
                       "HTTP " + std::to_string(result->status) + ": " + result->body);
  }

  json response;
  try {
    response = json::parse(result->body);
  } catch (const json::exception& e) {
    throw BackendError(BackendErrc::RemoteError, std::string("response is not JSON: ") + e.what());
  }
  if (!response.is_object() || !response.contains("text") || !response["text"].is_string()) {
    throw BackendError(BackendErrc::RemoteError, "response lacks a \"text\" string");
  }

  InferenceOutput out;
  out.text = response["text"].get<std::string>();
  out.token_count = std::min(response.value("token_count", gateway::count_tokens(out.text, 1 << 20)),
                             options_.decode.max_new_tokens);

  // Remote timings fill the end of the call; whatever they do not cover is
  // transfer time and lands in fusion.
  std::int64_t generation_done = t1;
  std::int64_t fusion_done = t0;
  if (auto it = response.find("timings_ms"); it != response.end() && it->is_object()) {
    auto us = [&](const char* key) {
      return static_cast<std::int64_t>(std::llround(std::max(0.0, it->value(key, 0.0)) * 1000.0));
    };
    generation_done = std::max(t0, t1 - us("text_decode"));
    fusion_done = std::max(t0, generation_done - us("generation"));
  }
  observer.mark(gateway::Stage::Fusion, fusion_done);
  observer.mark(gateway::Stage::Generation, generation_done);
  observer.mark(gateway::Stage::TextDecode, t1);
  return out;
}

}  // namespace vlmedge::backends
