#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "flowal/types.hpp"

namespace flowal {

/// Where records come from and how they are turned into features.
/// - source: "file:<path>", "tcp:<host>:<port>" or "unix:<path>"
/// - feature_columns: extracted in this order; dimension of every vector
/// - label_column: optional column holding ground truth (offline corpora)
/// - sampling: per-class acceptance ratios in [0,1]; absent classes pass
/// - sampling_key: field used as the sampler-visible class key; empty means
///   the ground-truth label
struct IngestConfig {
  std::string source;
  std::vector<std::string> feature_columns;
  std::optional<std::string> label_column;
  std::map<std::string, double> sampling;
  std::string sampling_key;
  std::size_t queue_capacity = 1024;

  void validate() const;
};

/// Pull interface shared by the offline and stream paths. next() returns
/// records in source order and std::nullopt at end of input. Structurally
/// bad rows are dropped and counted, never fatal (reject-and-count policy).
class RecordReader {
 public:
  virtual ~RecordReader() = default;
  virtual std::optional<FlowRecord> next() = 0;
  virtual std::uint64_t records_dropped() const { return 0; }
};

/// Line-at-a-time text source; the CSV parser sits on top of this so files
/// and sockets yield identical record sequences for identical bytes.
class LineSource {
 public:
  virtual ~LineSource() = default;
  virtual std::optional<std::string> next_line() = 0;
};

class FileLineSource : public LineSource {
 public:
  explicit FileLineSource(const std::string& path);
  std::optional<std::string> next_line() override;

 private:
  std::ifstream in_;
  std::string path_;
};

/// Connects to a TCP ("host:port") or unix-domain ("/path") endpoint and
/// reads newline-delimited text. Clean EOF ends the sequence; a failed read
/// mid-stream raises ConnectionLost. The optional stop flag aborts a blocked
/// read within ~100 ms.
class SocketLineSource : public LineSource {
 public:
  static std::unique_ptr<SocketLineSource> connect_tcp(const std::string& host, int port,
                                                       const std::atomic<bool>* stop = nullptr);
  static std::unique_ptr<SocketLineSource> connect_unix(const std::string& path,
                                                        const std::atomic<bool>* stop = nullptr);
  ~SocketLineSource() override;

  std::optional<std::string> next_line() override;

 private:
  SocketLineSource(int fd, const std::atomic<bool>* stop);

  int fd_;
  const std::atomic<bool>* stop_;
  std::string buffer_;
  bool eof_ = false;
};

/// CSV record reader: first line is the header, every later line one record.
/// The header must name every configured feature column (and the label
/// column, when set) or the reader fails with MissingColumn. record_ids are
/// assigned sequentially from 0 in yield order.
class CsvRecordReader : public RecordReader {
 public:
  CsvRecordReader(std::unique_ptr<LineSource> source, IngestConfig config);

  std::optional<FlowRecord> next() override;
  std::uint64_t records_dropped() const override { return dropped_; }

 private:
  void read_header();

  std::unique_ptr<LineSource> source_;
  IngestConfig config_;
  std::vector<std::string> header_;
  std::optional<std::size_t> label_index_;
  bool header_read_ = false;
  std::uint64_t next_id_ = 0;
  std::uint64_t dropped_ = 0;
};

std::unique_ptr<RecordReader> read_offline(const IngestConfig& config);
std::unique_ptr<RecordReader> read_stream(const IngestConfig& config,
                                          const std::atomic<bool>* stop = nullptr);

/// Opens whichever reader the source scheme names.
std::unique_ptr<RecordReader> open_reader(const IngestConfig& config,
                                          const std::atomic<bool>* stop = nullptr);

/// Independent per-record acceptance with probability ratios[class]; classes
/// absent from the map always pass. One uniform draw is consumed per record
/// whose class has a configured ratio, so the generator state fully captures
/// the sampler position in the stream.
class ClassSampler {
 public:
  ClassSampler(std::map<std::string, double> ratios, std::string key_field, std::uint64_t seed);

  bool accept(const FlowRecord& record);

  std::string rng_state() const;
  void restore_rng(const std::string& state);

 private:
  std::optional<std::string> class_key(const FlowRecord& record) const;

  std::map<std::string, double> ratios_;
  std::string key_field_;
  std::mt19937_64 rng_;
};

std::vector<FlowRecord> sample_by_class(const std::vector<FlowRecord>& records,
                                        const std::map<std::string, double>& ratios,
                                        std::uint64_t rng_seed,
                                        const std::string& key_field = "");

/// Pure feature extraction: feature_columns pulled in order and coerced to
/// double ("1e3" parses as 1000). Missing column -> MissingColumn; value that
/// does not coerce to a finite number -> NonFiniteValue.
FeatureVector preprocess(const FlowRecord& record, const IngestConfig& config);

/// Bounded MPSC handoff between a reader thread and the engine. push blocks
/// while full (backpressure); pop blocks while empty; close releases both
/// sides.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  bool push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

/// Runs an inner reader on its own thread and hands records over a bounded
/// queue. Reader errors are captured and rethrown on the consumer side.
class ThreadedReader : public RecordReader {
 public:
  ThreadedReader(std::unique_ptr<RecordReader> inner, std::size_t queue_capacity);
  ~ThreadedReader() override;

  std::optional<FlowRecord> next() override;
  std::uint64_t records_dropped() const override;

 private:
  std::unique_ptr<RecordReader> inner_;
  BoundedQueue<FlowRecord> queue_;
  std::thread worker_;
  std::exception_ptr error_;
  std::mutex error_mutex_;
  std::atomic<bool> done_{false};
};

}  // namespace flowal
