#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace diarize {

// Error hierarchy. Every failure surfaced by the library is one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix with value semantics.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <typename To, typename From>
Matrix<To> matrix_cast(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = static_cast<To>(m.data()[i]);
  return out;
}

/// Half-open time interval in seconds.
struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;

  TimeSpan() = default;
  TimeSpan(double start, double end);

  double duration() const noexcept { return end_s - start_s; }
  bool contains(double t) const noexcept { return t >= start_s && t < end_s; }
  bool operator==(const TimeSpan&) const = default;
};

struct Segment {
  TimeSpan span;
  std::string speaker;
  bool operator==(const Segment&) const = default;
};

/// Labelled speech regions for one recording.
class Annotation {
 public:
  Annotation() = default;
  explicit Annotation(std::string recording_id) : recording_id_(std::move(recording_id)) {}

  const std::string& recording_id() const noexcept { return recording_id_; }
  void set_recording_id(std::string id) { recording_id_ = std::move(id); }

  /// Inserts and keeps segments sorted by (start, speaker).
  void add(TimeSpan span, std::string speaker);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::size_t size() const noexcept { return segments_.size(); }
  bool empty() const noexcept { return segments_.empty(); }

  /// Distinct labels in order of first appearance.
  std::vector<std::string> labels() const;
  /// Sum of segment durations (overlapped speech counts once per speaker).
  double total_speech_duration() const;
  /// Merged, sorted timeline of one speaker.
  std::vector<TimeSpan> speaker_timeline(const std::string& speaker) const;
  /// Latest segment end, 0 if empty.
  double extent_end() const;

  bool operator==(const Annotation&) const = default;

 private:
  std::string recording_id_;
  std::vector<Segment> segments_;
};

/// Frame geometry of the convolutional front-end: 400-sample analysis window, 320-sample hop.
struct FrameRate {
  int sample_rate_hz = 16000;
  std::int64_t conv_window = 400;
  std::int64_t conv_hop = 320;

  double hop_seconds() const noexcept { return static_cast<double>(conv_hop) / sample_rate_hz; }
  double window_seconds() const noexcept { return static_cast<double>(conv_window) / sample_rate_hz; }
};

/// floor((n - window) / hop) + 1. Throws if n is shorter than one window.
std::int64_t frames_for_samples(std::int64_t n_samples, const FrameRate& fr = {});

/// Centre of frame i's receptive field, relative to the start of the signal.
double frame_to_time(std::int64_t frame, const FrameRate& fr = {});

/// Nearest frame whose centre is closest to t (clamped at 0).
std::int64_t time_to_frame(double t_s, const FrameRate& fr = {});

}  // namespace diarize
