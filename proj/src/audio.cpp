#include "diarize/audio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace diarize {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

}  // namespace

AudioBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "WAV file '" + path.string() + "': ";

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ParseError(where + "malformed RIFF header");

  FmtChunk fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t chunk_size = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16 || available < 16) throw ParseError(where + "truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      fmt.format = read_u16(f);
      fmt.channels = read_u16(f + 2);
      fmt.sample_rate = read_u32(f + 4);
      fmt.bits_per_sample = read_u16(f + 14);
      if (fmt.format == kFormatExtensible) {
        if (chunk_size < 40 || available < 40) throw ParseError(where + "truncated WAVE_FORMAT_EXTENSIBLE fmt chunk");
        // First two bytes of the SubFormat GUID carry the actual format tag.
        fmt.format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streams written without a final size use 0 or 0xFFFFFFFF; take what is present.
      data_size = (chunk_size == 0 || chunk_size > available) ? available : chunk_size;
      if (have_fmt) break;
    }
    pos = body + chunk_size + (chunk_size & 1U);
  }

  if (!have_fmt) throw ParseError(where + "missing fmt chunk");
  if (data == nullptr) throw ParseError(where + "missing data chunk");
  if (fmt.channels == 0) throw ParseError(where + "zero channels");
  if (fmt.sample_rate == 0) throw ParseError(where + "zero sample rate");

  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits_per_sample == 16;
  const bool float32 = fmt.format == kFormatFloat && fmt.bits_per_sample == 32;
  if (!pcm16 && !float32) {
    throw ParseError(where + "unsupported codec (format tag " + std::to_string(fmt.format) + ", " +
                     std::to_string(fmt.bits_per_sample) + " bits); expected 16-bit PCM or 32-bit float");
  }

  const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw ParseError(where + "zero-length data chunk");

  AudioBuffer buf;
  buf.sample_rate_hz = static_cast<int>(fmt.sample_rate);
  buf.recording_id = path.stem().string();
  buf.samples.resize(n_frames);
  const double inv_channels = 1.0 / fmt.channels;
  for (std::size_t i = 0; i < n_frames; ++i) {
    const unsigned char* frame = data + i * frame_bytes;
    double acc = 0.0;
    for (std::size_t ch = 0; ch < fmt.channels; ++ch) {
      const unsigned char* s = frame + ch * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(s)) / 32768.0;
      } else {
        acc += std::bit_cast<float>(read_u32(s));
      }
    }
    buf.samples[i] = static_cast<float>(acc * inv_channels);
  }
  return buf;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
  const auto n = static_cast<std::uint32_t>(buf.samples.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (float s : buf.samples) {
    const double clipped = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::clamp(std::lround(clipped * 32768.0), -32768L, 32767L));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write WAV file '" + path.string() + "'");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::int64_t chunk_count(std::int64_t total_samples, std::int64_t window, std::int64_t hop) {
  if (total_samples < 1) throw Error("empty input: audio has no samples");
  if (total_samples < window) return 1;
  const std::int64_t complete = (total_samples - window) / hop + 1;
  const bool tail_uncovered = (complete - 1) * hop + window < total_samples;
  return complete + (tail_uncovered ? 1 : 0);
}

ChunkBatch chunk_layout(std::int64_t total_samples, const PipelineConfig& cfg) {
  cfg.validate();
  ChunkBatch batch;
  batch.window_samples = cfg.window_samples();
  batch.hop_samples = cfg.hop_samples();
  batch.total_samples = total_samples;
  batch.sample_rate_hz = cfg.sample_rate_hz;
  const std::int64_t n = chunk_count(total_samples, batch.window_samples, batch.hop_samples);
  for (std::int64_t i = 0; i < n; ++i) batch.chunk_start_samples.push_back(i * batch.hop_samples);
  batch.real_samples_in_last = std::min(batch.window_samples, total_samples - batch.chunk_start_samples.back());
  return batch;
}

ChunkBatch sliding_window(const AudioBuffer& buf, const PipelineConfig& cfg) {
  if (buf.sample_rate_hz != cfg.sample_rate_hz) {
    throw ConfigError("audio sample rate is " + std::to_string(buf.sample_rate_hz) + " Hz but the pipeline expects " +
                      std::to_string(cfg.sample_rate_hz) + " Hz; resample the input first");
  }
  ChunkBatch batch = chunk_layout(static_cast<std::int64_t>(buf.samples.size()), cfg);
  const auto w = static_cast<std::size_t>(batch.window_samples);
  batch.chunks = Matrix<float>(batch.size(), w, 0.0f);
  for (std::size_t c = 0; c < batch.size(); ++c) {
    const auto start = static_cast<std::size_t>(batch.chunk_start_samples[c]);
    const std::size_t take = std::min(w, buf.samples.size() - start);
    std::copy_n(buf.samples.begin() + static_cast<std::ptrdiff_t>(start), take, batch.chunks.row(c).begin());
  }
  return batch;
}

}  // namespace diarize
