#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "voxedit/camera.hpp"
#include "voxedit/grid.hpp"
#include "voxedit/image.hpp"
#include "voxedit/render.hpp"

namespace voxedit {

enum class AttentionRole { kEdit, kObject };

std::string role_name(AttentionRole role);
AttentionRole parse_role(std::string_view name);

struct SdsRequest {
  const Image* image = nullptr;  // rendered RGB in [0,1]
  std::string prompt;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> guidance_scale;
  int iteration = 0;
  CameraPose pose;  // informational; remote backends ignore it
};

struct AttentionRequest {
  const Image* image = nullptr;
  std::string prompt;
  std::string token;
  AttentionRole role = AttentionRole::kEdit;
  double t = 0.2;
  std::uint64_t seed = 0;
  int iteration = 0;
  CameraPose pose;
};

/// Source of score-distillation gradients and per-token attention maps.
///
/// sds_gradient returns the complete per-pixel dLoss/dRGB (any timestep weighting folded in),
/// W x H x 3. attention_map returns a W x H x 1 probability map in [0,1].
class GuidanceBackend {
 public:
  virtual ~GuidanceBackend() = default;
  virtual Image sds_gradient(const SdsRequest& req) = 0;
  virtual Image attention_map(const AttentionRequest& req) = 0;
  virtual std::string describe() const = 0;
};

/// Analytic stand-in: the gradient of sum((x - target)^2) toward a fixed target image, or toward
/// a target grid rendered at the request pose. Attention maps come from optional attention grids
/// rendered at the request pose, else a constant.
class MockBackend : public GuidanceBackend {
 public:
  struct Options {
    std::optional<Image> target_image;
    std::optional<FeatureGrid> target_grid;
    std::optional<AttentionGrid> attention_edit;
    std::optional<AttentionGrid> attention_object;
    double attention_constant = 0.5;
    RenderConfig render;
  };

  explicit MockBackend(Options options);
  Image sds_gradient(const SdsRequest& req) override;
  Image attention_map(const AttentionRequest& req) override;
  std::string describe() const override;

 private:
  Options opt_;
};

/// Reads recorded responses: `iter_%06d.grad.pfm` for SDS gradients.
class ReplayBackend : public GuidanceBackend {
 public:
  explicit ReplayBackend(std::filesystem::path dir);
  Image sds_gradient(const SdsRequest& req) override;
  /// Attention recordings are pose-indexed; load them with load_attention_maps instead.
  Image attention_map(const AttentionRequest& req) override;
  std::string describe() const override;

  static std::filesystem::path gradient_path(const std::filesystem::path& dir, int iteration);

 private:
  std::filesystem::path dir_;
};

/// Client for the diffusion service. POST /sds_grad and /attention_map with a JSON body holding the
/// request fields plus `width`, `height`, `channels` and `data` (base64 little-endian f32, row-major,
/// top row first); responses carry the same four fields.
class HttpBackend : public GuidanceBackend {
 public:
  explicit HttpBackend(std::string url, int timeout_seconds = 600);
  Image sds_gradient(const SdsRequest& req) override;
  Image attention_map(const AttentionRequest& req) override;
  std::string describe() const override;

 private:
  std::string url_;
  int timeout_seconds_;
};

/// Forwards to another backend and writes every SDS response in the replay layout. Responses are
/// rounded to f32, as stored, before they are returned.
class RecordingBackend : public GuidanceBackend {
 public:
  RecordingBackend(GuidanceBackend& inner, std::filesystem::path dir);
  Image sds_gradient(const SdsRequest& req) override;
  Image attention_map(const AttentionRequest& req) override;
  std::string describe() const override;

 private:
  GuidanceBackend& inner_;
  std::filesystem::path dir_;
};

std::string encode_f32_base64(const Image& image);
Image decode_f32_base64(std::string_view text, int width, int height, int channels);

/// Applies VOXEDIT_BACKEND_URL: it replaces the URL of an `http:` spec and fills an empty spec.
std::string resolve_backend_spec(std::string spec);

/// `mock:target=<img>` | `mock:grid=<voxe>[,attn_edit=<voxe>,attn_obj=<voxe>,attn=<value>]` |
/// `replay:<dir>` | `http:<url>` (a bare http:// URL also works).
std::unique_ptr<GuidanceBackend> make_backend(const std::string& spec, const RenderConfig& mock_render = {});

}  // namespace voxedit
