#include "voxedit/guidance.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "voxedit/grid_io.hpp"

namespace voxedit {

std::string role_name(AttentionRole role) { return role == AttentionRole::kEdit ? "edit" : "object"; }

AttentionRole parse_role(std::string_view name) {
  if (name == "edit") return AttentionRole::kEdit;
  if (name == "object" || name == "obj") return AttentionRole::kObject;
  throw std::invalid_argument("unknown attention role: " + std::string(name));
}

namespace {

void check_dims(const Image& out, const Image& in, int channels, const char* what) {
  if (out.width != in.width || out.height != in.height || out.channels != channels) {
    throw std::runtime_error(std::string(what) + ": response dimensions do not match the request");
  }
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Mock

MockBackend::MockBackend(Options options) : opt_(std::move(options)) {}

Image MockBackend::sds_gradient(const SdsRequest& req) {
  const Image& x = *req.image;
  if (!opt_.target_image && !opt_.target_grid) {
    throw std::runtime_error("mock backend has no target image or target grid for SDS requests");
  }
  const Image target = opt_.target_image ? *opt_.target_image : render(*opt_.target_grid, req.pose, opt_.render).rgb;
  if (!target.same_dims(x)) throw std::runtime_error("mock: target image does not match render size");
  Image g(x.width, x.height, x.channels);
  for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = 2.0 * (x.data[i] - target.data[i]);
  return g;
}

Image MockBackend::attention_map(const AttentionRequest& req) {
  const auto& grid = req.role == AttentionRole::kEdit ? opt_.attention_edit : opt_.attention_object;
  CameraPose pose = req.pose;
  pose.width = req.image->width;
  pose.height = req.image->height;
  if (grid) return render_attention(*grid, pose, opt_.render);
  return Image(req.image->width, req.image->height, 1, opt_.attention_constant);
}

std::string MockBackend::describe() const {
  return opt_.target_image ? "mock:target-image" : "mock:target-grid";
}

// ---------------------------------------------------------------------------------------------
// Replay

ReplayBackend::ReplayBackend(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) throw std::invalid_argument("replay directory not found: " + dir_.string());
}

std::filesystem::path ReplayBackend::gradient_path(const std::filesystem::path& dir, int iteration) {
  char name[64];
  std::snprintf(name, sizeof name, "iter_%06d.grad.pfm", iteration);
  return dir / name;
}

Image ReplayBackend::sds_gradient(const SdsRequest& req) {
  const auto path = gradient_path(dir_, req.iteration);
  if (!std::filesystem::exists(path)) throw std::runtime_error("replay: missing " + path.string());
  Image g = load_pfm(path);
  check_dims(g, *req.image, 3, "replay");
  return g;
}

Image ReplayBackend::attention_map(const AttentionRequest&) {
  throw std::runtime_error("replay: attention maps are pose-indexed; lift from the map directory instead");
}

std::string ReplayBackend::describe() const { return "replay:" + dir_.string(); }

// ---------------------------------------------------------------------------------------------
// HTTP

std::string encode_f32_base64(const Image& image) {
  std::vector<float> raw(image.data.begin(), image.data.end());
  if constexpr (std::endian::native == std::endian::big) {
    throw std::runtime_error("big-endian hosts are not supported by the wire format");
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  const std::size_t n = raw.size() * sizeof(float);
  std::string out(4 * ((n + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes, static_cast<int>(n));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

Image decode_f32_base64(std::string_view text, int width, int height, int channels) {
  Image img(width, height, channels);
  const std::size_t expected = img.data.size() * sizeof(float);
  if (text.size() % 4 != 0) throw std::runtime_error("base64 payload has invalid length");
  std::vector<unsigned char> bytes(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(bytes.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw std::runtime_error("invalid base64 payload");
  std::size_t padding = 0;
  if (!text.empty() && text.back() == '=') ++padding;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
  if (static_cast<std::size_t>(n) - padding != expected) {
    throw std::runtime_error("payload holds " + std::to_string(static_cast<std::size_t>(n) - padding) +
                             " bytes, expected " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    float f;
    std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof f);
    img.data[i] = f;
  }
  return img;
}

namespace {

Image post_image(const std::string& url, int timeout, const std::string& endpoint, const nlohmann::json& body,
                 const Image& request_image, int response_channels) {
  httplib::Client client(url);
  client.set_read_timeout(timeout, 0);
  client.set_write_timeout(timeout, 0);
  const auto res = client.Post(endpoint, body.dump(), "application/json");
  if (!res) throw std::runtime_error("http " + endpoint + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw std::runtime_error("http " + endpoint + ": status " + std::to_string(res->status) + ": " + res->body);
  }
  const auto j = nlohmann::json::parse(res->body);
  Image out = decode_f32_base64(j.at("data").get<std::string>(), j.at("width").get<int>(), j.at("height").get<int>(),
                                j.at("channels").get<int>());
  check_dims(out, request_image, response_channels, endpoint.c_str());
  return out;
}

nlohmann::json image_fields(const Image& img) {
  return {{"width", img.width}, {"height", img.height}, {"channels", img.channels}, {"data", encode_f32_base64(img)}};
}

}  // namespace

HttpBackend::HttpBackend(std::string url, int timeout_seconds) : url_(std::move(url)), timeout_seconds_(timeout_seconds) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
}

Image HttpBackend::sds_gradient(const SdsRequest& req) {
  nlohmann::json body = image_fields(*req.image);
  body["prompt"] = req.prompt;
  body["t"] = req.t;
  body["seed"] = req.seed;
  if (req.guidance_scale) body["guidance_scale"] = *req.guidance_scale;
  return post_image(url_, timeout_seconds_, "/sds_grad", body, *req.image, 3);
}

Image HttpBackend::attention_map(const AttentionRequest& req) {
  nlohmann::json body = image_fields(*req.image);
  body["prompt"] = req.prompt;
  body["token"] = req.token;
  body["role"] = role_name(req.role);
  body["t"] = req.t;
  body["seed"] = req.seed;
  return post_image(url_, timeout_seconds_, "/attention_map", body, *req.image, 1);
}

std::string HttpBackend::describe() const { return "http:" + url_; }

// ---------------------------------------------------------------------------------------------
// Recording

RecordingBackend::RecordingBackend(GuidanceBackend& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

Image RecordingBackend::sds_gradient(const SdsRequest& req) {
  Image g = inner_.sds_gradient(req);
  save_pfm(ReplayBackend::gradient_path(dir_, req.iteration), g);
  // Hand back what a replay will read so live and replayed runs match bit for bit.
  for (double& v : g.data) v = static_cast<float>(v);
  return g;
}

Image RecordingBackend::attention_map(const AttentionRequest& req) { return inner_.attention_map(req); }

std::string RecordingBackend::describe() const { return inner_.describe() + " (recording)"; }

// ---------------------------------------------------------------------------------------------

std::string resolve_backend_spec(std::string spec) {
  const char* env = std::getenv("VOXEDIT_BACKEND_URL");
  if (env == nullptr || *env == '\0') return spec;
  if (spec.empty() || spec.starts_with("http:") || spec.starts_with("https:")) return std::string("http:") + env;
  return spec;
}

std::unique_ptr<GuidanceBackend> make_backend(const std::string& spec, const RenderConfig& mock_render) {
  if (spec.starts_with("http://") || spec.starts_with("https://")) return std::make_unique<HttpBackend>(spec);
  if (spec.starts_with("http:")) return std::make_unique<HttpBackend>(spec.substr(5));
  if (spec.starts_with("replay:")) return std::make_unique<ReplayBackend>(spec.substr(7));
  if (spec.starts_with("mock:")) {
    MockBackend::Options opt;
    opt.render = mock_render;
    std::string_view rest = std::string_view(spec).substr(5);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw std::invalid_argument("mock option needs key=value: " + std::string(item));
      const std::string key(item.substr(0, eq));
      const std::string value(item.substr(eq + 1));
      if (key == "target") {
        opt.target_image = load_image(value);
      } else if (key == "grid") {
        opt.target_grid = load_feature_grid(value);
      } else if (key == "attn_edit") {
        opt.attention_edit = load_attention_grid(value);
      } else if (key == "attn_obj") {
        opt.attention_object = load_attention_grid(value);
      } else if (key == "attn") {
        opt.attention_constant = std::stod(value);
      } else {
        throw std::invalid_argument("unknown mock option: " + key);
      }
    }
    return std::make_unique<MockBackend>(std::move(opt));
  }
  throw std::invalid_argument("unknown backend spec: " + spec);
}

}  // namespace voxedit
