#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "voxedit/grid_io.hpp"
#include "voxedit/guidance.hpp"

// After Eigen: glibc's resolver header defines a `_res` macro that clashes with Eigen internals.
#include <httplib.h>

using namespace voxedit;

namespace {

// In-process stand-in for the diffusion service. Records the last request body and answers with
// the request image scaled by `gain` (SDS) or its first channel (attention).
class FakeService {
 public:
  FakeService() {
    server_.Post("/sds_grad", [this](const httplib::Request& req, httplib::Response& res) {
      last = nlohmann::json::parse(req.body);
      if (status != 200) {
        res.status = status;
        res.set_content("model not loaded", "text/plain");
        return;
      }
      Image img = decode_f32_base64(last.at("data").get<std::string>(), last.at("width"), last.at("height"),
                                    last.at("channels"));
      for (double& v : img.data) v *= gain;
      if (shrink) img = Image(img.width - 1, img.height, img.channels);
      res.set_content(nlohmann::json{{"width", img.width},
                                     {"height", img.height},
                                     {"channels", img.channels},
                                     {"data", encode_f32_base64(img)}}
                          .dump(),
                      "application/json");
    });
    server_.Post("/attention_map", [this](const httplib::Request& req, httplib::Response& res) {
      last = nlohmann::json::parse(req.body);
      const Image img = decode_f32_base64(last.at("data").get<std::string>(), last.at("width"), last.at("height"),
                                          last.at("channels"));
      Image map(img.width, img.height, 1);
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) map.at(x, y, 0) = img.at(x, y, 0);
      res.set_content(nlohmann::json{{"width", map.width},
                                     {"height", map.height},
                                     {"channels", 1},
                                     {"data", encode_f32_base64(map)}}
                          .dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  nlohmann::json last;
  double gain = 2.0;
  int status = 200;
  bool shrink = false;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Image float_image(std::mt19937_64& rng, int w, int h, int c) {
  Image img = testing::random_image(rng, w, h, c, 0.0, 1.0);
  for (double& v : img.data) v = static_cast<float>(v);
  return img;
}

}  // namespace

TEST_CASE("base64 payload is little-endian f32") {
  Image one(1, 1, 1, 1.0);
  CHECK(encode_f32_base64(one) == "AACAPw==");
  std::mt19937_64 rng(1);
  const Image img = float_image(rng, 5, 3, 3);
  CHECK(decode_f32_base64(encode_f32_base64(img), 5, 3, 3) == img);
  CHECK_THROWS(decode_f32_base64(encode_f32_base64(img), 5, 4, 3));
  CHECK_THROWS(decode_f32_base64("not base64!", 1, 1, 1));
}

TEST_CASE("http backend speaks the wire format") {
  FakeService service;
  HttpBackend backend(service.url());
  std::mt19937_64 rng(2);
  const Image img = float_image(rng, 6, 4, 3);

  SdsRequest req;
  req.image = &img;
  req.prompt = "a red hat";
  req.t = 0.35;
  req.seed = 17;
  const Image g = backend.sds_gradient(req);
  CHECK(service.last.at("prompt") == "a red hat");
  CHECK(service.last.at("t") == 0.35);
  CHECK(service.last.at("seed") == 17);
  CHECK(service.last.at("width") == 6);
  CHECK(service.last.at("height") == 4);
  CHECK(service.last.at("channels") == 3);
  CHECK_FALSE(service.last.contains("guidance_scale"));
  REQUIRE(g.same_dims(img));
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(g.data[i] == 2.0 * img.data[i]);

  req.guidance_scale = 100.0;
  backend.sds_gradient(req);
  CHECK(service.last.at("guidance_scale") == 100.0);

  AttentionRequest areq;
  areq.image = &img;
  areq.prompt = "a red hat";
  areq.token = "hat";
  areq.role = AttentionRole::kObject;
  const Image map = backend.attention_map(areq);
  CHECK(service.last.at("token") == "hat");
  CHECK(service.last.at("role") == "object");
  CHECK(service.last.at("t") == 0.2);
  CHECK(map.channels == 1);
  CHECK(map.at(3, 2, 0) == img.at(3, 2, 0));
}

TEST_CASE("http errors surface") {
  FakeService service;
  HttpBackend backend(service.url());
  const Image img(4, 4, 3, 0.5);
  SdsRequest req;
  req.image = &img;
  service.status = 503;
  CHECK_THROWS_WITH_AS(backend.sds_gradient(req), doctest::Contains("503"), std::runtime_error);
  service.status = 200;
  service.shrink = true;
  CHECK_THROWS_AS(backend.sds_gradient(req), std::runtime_error);

  HttpBackend nowhere("http://127.0.0.1:1", 2);
  CHECK_THROWS_AS(nowhere.sds_gradient(req), std::runtime_error);
}

TEST_CASE("backend spec parsing and the environment override") {
  unsetenv("VOXEDIT_BACKEND_URL");
  CHECK(resolve_backend_spec("replay:/tmp/x") == "replay:/tmp/x");
  CHECK(resolve_backend_spec("http://a:1") == "http://a:1");
  setenv("VOXEDIT_BACKEND_URL", "http://b:2", 1);
  CHECK(resolve_backend_spec("http://a:1") == "http:http://b:2");
  CHECK(resolve_backend_spec("") == "http:http://b:2");
  CHECK(resolve_backend_spec("mock:attn=0.3") == "mock:attn=0.3");
  unsetenv("VOXEDIT_BACKEND_URL");

  CHECK(make_backend("http://localhost:9")->describe() == "http:http://localhost:9");
  CHECK(make_backend("http:http://localhost:9")->describe() == "http:http://localhost:9");
  CHECK_THROWS_AS(make_backend("ftp://x"), std::invalid_argument);
  CHECK_THROWS_AS(make_backend("mock:color=3"), std::invalid_argument);
  CHECK_THROWS_AS(make_backend("mock:attn"), std::invalid_argument);

  testing::TempDir dir("spec");
  std::mt19937_64 rng(3);
  const FeatureGrid g = testing::random_positive_grid(rng, 4, 0.0, 2.0);
  save_grid(dir / "t.voxe", g);
  auto mock = make_backend("mock:grid=" + (dir / "t.voxe").string() + ",attn=0.25");
  const CameraPose pose = testing::random_orbit(rng, 6);
  const Image x = render(g, pose, RenderConfig{}).rgb;
  SdsRequest req;
  req.image = &x;
  req.pose = pose;
  for (double v : mock->sds_gradient(req).data) CHECK(v == 0.0);
  AttentionRequest areq;
  areq.image = &x;
  areq.pose = pose;
  for (double v : mock->attention_map(areq).data) CHECK(v == 0.25);
}

TEST_CASE("replay backend reads the recorded layout") {
  testing::TempDir dir("rep");
  CHECK(ReplayBackend::gradient_path(dir.path(), 42).filename() == "iter_000042.grad.pfm");
  const Image img(3, 2, 3, 0.5);
  const Image g(3, 2, 3, -0.25);
  save_pfm(ReplayBackend::gradient_path(dir.path(), 0), g);
  ReplayBackend replay(dir.path());
  SdsRequest req;
  req.image = &img;
  CHECK(replay.sds_gradient(req) == g);
  req.iteration = 1;
  CHECK_THROWS(replay.sds_gradient(req));
  AttentionRequest areq;
  areq.image = &img;
  CHECK_THROWS(replay.attention_map(areq));
  CHECK(parse_role("obj") == AttentionRole::kObject);
  CHECK(parse_role("edit") == AttentionRole::kEdit);
  CHECK_THROWS(parse_role("background"));
}
