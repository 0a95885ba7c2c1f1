#include "pvm/video_io.h"

#include <algorithm>
#include <string>
#include <utility>

#include "pvm/error.h"

namespace pvm {

ChromaFormat ParseChromaFormat(std::string_view text) {
  if (text == "420") return ChromaFormat::k420;
  if (text == "422") return ChromaFormat::k422;
  if (text == "444") return ChromaFormat::k444;
  if (text == "luma" || text == "400") return ChromaFormat::kLumaOnly;
  throw UsageError("unknown chroma format '" + std::string(text) +
                   "' (expected 420, 422, 444 or luma)");
}

std::string_view ChromaFormatName(ChromaFormat format) {
  switch (format) {
    case ChromaFormat::k420: return "420";
    case ChromaFormat::k422: return "422";
    case ChromaFormat::k444: return "444";
    case ChromaFormat::kLumaOnly: return "luma";
  }
  return "?";
}

std::size_t VideoSpec::luma_bytes() const {
  return static_cast<std::size_t>(width) * height;
}

std::size_t VideoSpec::chroma_plane_bytes() const {
  const std::size_t half_w = (static_cast<std::size_t>(width) + 1) / 2;
  const std::size_t half_h = (static_cast<std::size_t>(height) + 1) / 2;
  switch (chroma) {
    case ChromaFormat::k420: return half_w * half_h;
    case ChromaFormat::k422: return half_w * height;
    case ChromaFormat::k444: return luma_bytes();
    case ChromaFormat::kLumaOnly: return 0;
  }
  return 0;
}

std::size_t VideoSpec::frame_bytes() const {
  return luma_bytes() + 2 * chroma_plane_bytes();
}

void VideoSpec::validate() const {
  if (width <= 0 || height <= 0) {
    throw UsageError("video width and height must be positive");
  }
  if (bit_depth != 8) {
    throw UsageError("only 8-bit video is supported");
  }
}

YuvFileSource::YuvFileSource(const std::filesystem::path& path,
                             const VideoSpec& spec)
    : spec_(spec) {
  spec_.validate();
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) {
    throw DataError("cannot open '" + path.string() + "': " + ec.message());
  }
  const std::size_t per_frame = spec_.frame_bytes();
  if (size % per_frame != 0) {
    throw DataError("size mismatch for '" + path.string() + "': " +
                    std::to_string(size) + " bytes is not a multiple of " +
                    std::to_string(per_frame) + " bytes per frame (" +
                    std::to_string(spec_.width) + "x" +
                    std::to_string(spec_.height) + " " +
                    std::string(ChromaFormatName(spec_.chroma)) + ")");
  }
  frame_count_ = size / per_frame;
  stream_.open(path, std::ios::binary);
  if (!stream_) {
    throw DataError("cannot open '" + path.string() + "'");
  }
}

LumaFrame YuvFileSource::read_luma(std::size_t index) const {
  if (index >= frame_count_) {
    throw DataError("frame index " + std::to_string(index) +
                    " out of range (frame count " +
                    std::to_string(frame_count_) + ")");
  }
  std::vector<std::uint8_t> samples(spec_.luma_bytes());
  {
    std::lock_guard lock(mutex_);
    stream_.clear();
    stream_.seekg(static_cast<std::streamoff>(index * spec_.frame_bytes()));
    stream_.read(reinterpret_cast<char*>(samples.data()),
                 static_cast<std::streamsize>(samples.size()));
    if (!stream_) {
      throw DataError("short read at frame " + std::to_string(index));
    }
  }
  return LumaFrame(spec_.width, spec_.height, std::move(samples));
}

FrameList::FrameList(std::vector<LumaFrame> frames)
    : frames_(std::move(frames)) {
  for (const auto& frame : frames_) {
    if (!frame.same_shape(frames_.front())) {
      throw DataError("frame list has inconsistent dimensions");
    }
  }
}

int FrameList::width() const {
  return frames_.empty() ? 0 : frames_.front().width();
}

int FrameList::height() const {
  return frames_.empty() ? 0 : frames_.front().height();
}

LumaFrame FrameList::read_luma(std::size_t index) const {
  if (index >= frames_.size()) {
    throw DataError("frame index " + std::to_string(index) +
                    " out of range (frame count " +
                    std::to_string(frames_.size()) + ")");
  }
  return frames_[index];
}

void AccessLog::record(std::size_t index) {
  std::lock_guard lock(mutex_);
  indices_.push_back(index);
}

std::vector<std::size_t> AccessLog::take() {
  std::lock_guard lock(mutex_);
  return std::exchange(indices_, {});
}

LumaFrame LoggingSource::read_luma(std::size_t index) const {
  log_.record(index);
  return inner_.read_luma(index);
}

std::unique_ptr<FrameSource> OpenSequence(const std::filesystem::path& path,
                                          const VideoSpec& spec) {
  return std::make_unique<YuvFileSource>(path, spec);
}

void WriteSequence(const std::filesystem::path& path, const VideoSpec& spec,
                   const std::vector<LumaFrame>& frames) {
  spec.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write '" + path.string() + "'");
  }
  const std::vector<char> chroma(spec.chroma_plane_bytes(),
                                 static_cast<char>(128));
  for (const auto& frame : frames) {
    if (frame.width() != spec.width || frame.height() != spec.height) {
      throw DataError("frame dimensions do not match the video geometry");
    }
    const auto samples = frame.samples();
    out.write(reinterpret_cast<const char*>(samples.data()),
              static_cast<std::streamsize>(samples.size()));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
  }
  if (!out) {
    throw DataError("write failed for '" + path.string() + "'");
  }
}

LumaFrame Crop(const LumaFrame& frame, int margin) {
  if (margin < 0) {
    throw UsageError("crop margin must be non-negative");
  }
  if (2 * margin >= frame.width() || 2 * margin >= frame.height()) {
    throw UsageError("crop margin " + std::to_string(margin) +
                     " too large for " + std::to_string(frame.width()) + "x" +
                     std::to_string(frame.height()) + " frame");
  }
  if (margin == 0) return frame;
  LumaFrame out(frame.width() - 2 * margin, frame.height() - 2 * margin);
  for (int y = 0; y < out.height(); ++y) {
    const auto src = frame.row(y + margin).subspan(margin, out.width());
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

}  // namespace pvm
