#ifndef UAV_TENSOR_H_
#define UAV_TENSOR_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uav {

// Channel-major single frame: data[(c * height + y) * width + x].
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        data(static_cast<size_t>(c) * h * w, fill) {}

  size_t Index(int c, int y, int x) const {
    return (static_cast<size_t>(c) * height + y) * width + x;
  }
  double& at(int c, int y, int x) { return data[Index(c, y, x)]; }
  double at(int c, int y, int x) const { return data[Index(c, y, x)]; }
  size_t plane_size() const { return static_cast<size_t>(height) * width; }
  bool SameShape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

struct Shape4 {
  int frames = 0;
  int channels = 0;
  int height = 0;
  int width = 0;

  size_t frame_size() const {
    return static_cast<size_t>(channels) * height * width;
  }
  size_t size() const { return frame_size() * frames; }
  bool operator==(const Shape4&) const = default;
};

std::string ToString(const Shape4& s);

// Time-major 4-D array (frames x channels x height x width).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor4(int t, int c, int h, int w, double fill = 0.0)
      : Tensor4(Shape4{t, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  int frames() const { return shape_.frames; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  size_t size() const { return data_.size(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  size_t Index(int t, int c, int y, int x) const {
    return ((static_cast<size_t>(t) * shape_.channels + c) * shape_.height +
            y) * shape_.width + x;
  }
  double& at(int t, int c, int y, int x) { return data_[Index(t, c, y, x)]; }
  double at(int t, int c, int y, int x) const {
    return data_[Index(t, c, y, x)];
  }

  std::span<double> FrameSpan(int t) {
    return {data_.data() + t * shape_.frame_size(), shape_.frame_size()};
  }
  std::span<const double> FrameSpan(int t) const {
    return {data_.data() + t * shape_.frame_size(), shape_.frame_size()};
  }
  Image Frame(int t) const;
  void SetFrame(int t, const Image& frame);

  bool AllFinite() const;

 private:
  Shape4 shape_;
  std::vector<double> data_;
};

// Carrier of z, z_t and the predicted clean latent.
class LatentVideo : public Tensor4 {
 public:
  using Tensor4::Tensor4;
  LatentVideo() = default;
  explicit LatentVideo(Tensor4 t) : Tensor4(std::move(t)) {}

  std::optional<int> step_tag;
};

inline constexpr int kDefaultLatentChannels = 4;

// RGB frames with samples in [0,1].
struct Video {
  Tensor4 frames;
  std::optional<double> frame_rate;
  std::vector<std::string> source_paths;

  int num_frames() const { return frames.frames(); }
  int height() const { return frames.height(); }
  int width() const { return frames.width(); }
};

// Throws InvalidParameter unless the tensor is a non-empty 3-channel video
// with finite samples in [0,1].
void ValidateVideo(const Video& video);

// Throws ShapeMismatch naming `what` when the shapes differ.
void RequireSameShape(const Shape4& a, const Shape4& b, const char* what);

}  // namespace uav

#endif  // UAV_TENSOR_H_
