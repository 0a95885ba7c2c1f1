#ifndef PVM_VIDEO_IO_H_
#define PVM_VIDEO_IO_H_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string_view>
#include <vector>

#include "pvm/plane.h"

namespace pvm {

enum class ChromaFormat { k420, k422, k444, kLumaOnly };

// Accepts "420", "422", "444", "luma" (also "400").
ChromaFormat ParseChromaFormat(std::string_view text);
std::string_view ChromaFormatName(ChromaFormat format);

// Geometry of a headerless planar YUV file.
struct VideoSpec {
  int width = 0;
  int height = 0;
  ChromaFormat chroma = ChromaFormat::k420;
  int bit_depth = 8;

  std::size_t luma_bytes() const;
  std::size_t chroma_plane_bytes() const;
  std::size_t frame_bytes() const;
  void validate() const;
};

// Random-access provider of luminance frames.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual std::size_t frame_count() const = 0;
  virtual int width() const = 0;
  virtual int height() const = 0;
  // Throws a data error when index >= frame_count().
  virtual LumaFrame read_luma(std::size_t index) const = 0;
};

// Raw planar YUV file. Reads are serialized internally, so one instance
// may be shared between threads.
class YuvFileSource final : public FrameSource {
 public:
  YuvFileSource(const std::filesystem::path& path, const VideoSpec& spec);

  std::size_t frame_count() const override { return frame_count_; }
  int width() const override { return spec_.width; }
  int height() const override { return spec_.height; }
  LumaFrame read_luma(std::size_t index) const override;

  const VideoSpec& spec() const { return spec_; }

 private:
  VideoSpec spec_;
  std::size_t frame_count_ = 0;
  mutable std::mutex mutex_;
  mutable std::ifstream stream_;
};

// In-memory sequence, mostly for tests and synthetic clips.
class FrameList final : public FrameSource {
 public:
  explicit FrameList(std::vector<LumaFrame> frames);

  std::size_t frame_count() const override { return frames_.size(); }
  int width() const override;
  int height() const override;
  LumaFrame read_luma(std::size_t index) const override;

 private:
  std::vector<LumaFrame> frames_;
};

// Records every index read through it. Used to audit how many frames a
// metric touches per scored frame.
class AccessLog {
 public:
  void record(std::size_t index);
  std::vector<std::size_t> take();

 private:
  std::mutex mutex_;
  std::vector<std::size_t> indices_;
};

class LoggingSource final : public FrameSource {
 public:
  LoggingSource(const FrameSource& inner, AccessLog& log)
      : inner_(inner), log_(log) {}

  std::size_t frame_count() const override { return inner_.frame_count(); }
  int width() const override { return inner_.width(); }
  int height() const override { return inner_.height(); }
  LumaFrame read_luma(std::size_t index) const override;

 private:
  const FrameSource& inner_;
  AccessLog& log_;
};

std::unique_ptr<FrameSource> OpenSequence(const std::filesystem::path& path,
                                          const VideoSpec& spec);

// Writes frames as planar YUV; chroma planes are filled with 128.
void WriteSequence(const std::filesystem::path& path, const VideoSpec& spec,
                   const std::vector<LumaFrame>& frames);

// Interior region after removing `margin` pixels from every side.
LumaFrame Crop(const LumaFrame& frame, int margin);

}  // namespace pvm

#endif  // PVM_VIDEO_IO_H_
