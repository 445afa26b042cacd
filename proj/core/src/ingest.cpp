#include "flowal/ingest.hpp"

#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

#include "flowal/util.hpp"

namespace flowal {

void IngestConfig::validate() const {
  if (feature_columns.empty())
    throw Error(Errc::config_error, "feature_columns must not be empty");
  for (const auto& [name, ratio] : sampling) {
    if (!(ratio >= 0.0 && ratio <= 1.0))
      throw Error(Errc::config_error, "sampling ratio for '" + name + "' outside [0,1]");
  }
  if (source.empty()) throw Error(Errc::config_error, "source not set");
}

FileLineSource::FileLineSource(const std::string& path) : in_(path), path_(path) {
  if (!in_) throw Error(Errc::io_error, "cannot open '" + path + "'");
}

std::optional<std::string> FileLineSource::next_line() {
  std::string line;
  if (!std::getline(in_, line)) {
    if (in_.bad()) throw Error(Errc::io_error, "read failed on '" + path_ + "'");
    return std::nullopt;
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

SocketLineSource::SocketLineSource(int fd, const std::atomic<bool>* stop)
    : fd_(fd), stop_(stop) {}

SocketLineSource::~SocketLineSource() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<SocketLineSource> SocketLineSource::connect_tcp(const std::string& host, int port,
                                                                const std::atomic<bool>* stop) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
  if (rc != 0)
    throw Error(Errc::io_error, "resolve '" + host + "': " + gai_strerror(rc));

  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0)
    throw Error(Errc::io_error, "cannot connect to " + host + ":" + service);
  return std::unique_ptr<SocketLineSource>(new SocketLineSource(fd, stop));
}

std::unique_ptr<SocketLineSource> SocketLineSource::connect_unix(const std::string& path,
                                                                 const std::atomic<bool>* stop) {
  int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw Error(Errc::io_error, "socket: " + std::string(std::strerror(errno)));
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) {
    ::close(fd);
    throw Error(Errc::io_error, "unix socket path too long");
  }
  std::strncpy(addr.sun_path, path.c_str(), sizeof(addr.sun_path) - 1);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw Error(Errc::io_error, "cannot connect to unix socket '" + path + "'");
  }
  return std::unique_ptr<SocketLineSource>(new SocketLineSource(fd, stop));
}

std::optional<std::string> SocketLineSource::next_line() {
  while (true) {
    std::size_t pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (eof_) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }

    pollfd pfd{fd_, POLLIN, 0};
    int ready = ::poll(&pfd, 1, 100);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::connection_lost, std::strerror(errno));
    }
    if (ready == 0) {
      if (stop_ && stop_->load(std::memory_order_relaxed)) {
        eof_ = true;  // treat external stop as end of stream
      }
      continue;
    }

    char chunk[4096];
    ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(Errc::connection_lost, std::strerror(errno));
    }
    if (n == 0) {
      eof_ = true;  // peer closed: clean end of stream
      continue;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

CsvRecordReader::CsvRecordReader(std::unique_ptr<LineSource> source, IngestConfig config)
    : source_(std::move(source)), config_(std::move(config)) {
  config_.validate();
}

void CsvRecordReader::read_header() {
  auto line = source_->next_line();
  if (!line) throw Error(Errc::missing_column, "input is empty, no header line");
  header_ = split_csv_line(*line);
  for (auto& name : header_) name = trim(name);

  auto column_index = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header_.begin(), header_.end(), name);
    if (it == header_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header_.begin());
  };

  for (const auto& col : config_.feature_columns) {
    if (!column_index(col))
      throw Error(Errc::missing_column, "header does not name column '" + col + "'");
  }
  if (config_.label_column) {
    label_index_ = column_index(*config_.label_column);
    if (!label_index_)
      throw Error(Errc::missing_column,
                  "header does not name label column '" + *config_.label_column + "'");
  }
  header_read_ = true;
}

std::optional<FlowRecord> CsvRecordReader::next() {
  if (!header_read_) read_header();
  while (true) {
    auto line = source_->next_line();
    if (!line) return std::nullopt;
    if (line->empty()) continue;

    std::vector<std::string> cells = split_csv_line(*line);
    if (cells.size() != header_.size()) {
      ++dropped_;
      continue;
    }

    FlowRecord record;
    record.record_id = next_id_++;
    record.fields.reserve(header_.size());
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (label_index_ && i == *label_index_) continue;
      record.fields.emplace_back(header_[i], FieldValue(std::move(cells[i])));
    }
    if (label_index_) record.ground_truth = cells[*label_index_];
    return record;
  }
}

namespace {

constexpr std::string_view kFileScheme = "file:";
constexpr std::string_view kTcpScheme = "tcp:";
constexpr std::string_view kUnixScheme = "unix:";

}  // namespace

std::unique_ptr<RecordReader> read_offline(const IngestConfig& config) {
  std::string path = config.source;
  if (path.rfind(kFileScheme, 0) == 0) path = path.substr(kFileScheme.size());
  return std::make_unique<CsvRecordReader>(std::make_unique<FileLineSource>(path), config);
}

std::unique_ptr<RecordReader> read_stream(const IngestConfig& config,
                                          const std::atomic<bool>* stop) {
  const std::string& src = config.source;
  std::unique_ptr<LineSource> source;
  if (src.rfind(kUnixScheme, 0) == 0) {
    source = SocketLineSource::connect_unix(src.substr(kUnixScheme.size()), stop);
  } else {
    std::string endpoint = src;
    if (endpoint.rfind(kTcpScheme, 0) == 0) endpoint = endpoint.substr(kTcpScheme.size());
    std::size_t colon = endpoint.rfind(':');
    if (colon == std::string::npos)
      throw Error(Errc::config_error, "stream source must be host:port, got '" + src + "'");
    int port = 0;
    try {
      port = std::stoi(endpoint.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(Errc::config_error, "bad port in '" + src + "'");
    }
    source = SocketLineSource::connect_tcp(endpoint.substr(0, colon), port, stop);
  }
  return std::make_unique<CsvRecordReader>(std::move(source), config);
}

std::unique_ptr<RecordReader> open_reader(const IngestConfig& config,
                                          const std::atomic<bool>* stop) {
  const std::string& src = config.source;
  if (src.rfind(kTcpScheme, 0) == 0 || src.rfind(kUnixScheme, 0) == 0)
    return read_stream(config, stop);
  return read_offline(config);
}

ClassSampler::ClassSampler(std::map<std::string, double> ratios, std::string key_field,
                           std::uint64_t seed)
    : ratios_(std::move(ratios)), key_field_(std::move(key_field)), rng_(seed) {
  for (const auto& [name, ratio] : ratios_) {
    if (!(ratio >= 0.0 && ratio <= 1.0))
      throw Error(Errc::config_error, "sampling ratio for '" + name + "' outside [0,1]");
  }
}

std::optional<std::string> ClassSampler::class_key(const FlowRecord& record) const {
  if (key_field_.empty()) return record.ground_truth;
  const FieldValue* value = record.find_field(key_field_);
  if (!value) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(value)) return *s;
  return format_double(std::get<double>(*value));
}

bool ClassSampler::accept(const FlowRecord& record) {
  auto key = class_key(record);
  if (!key) return true;
  auto it = ratios_.find(*key);
  if (it == ratios_.end()) return true;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng_) < it->second;
}

void ClassSampler::restore_rng(const std::string& state) { rng_ = deserialize_rng(state); }

std::string ClassSampler::rng_state() const { return serialize_rng(rng_); }

std::vector<FlowRecord> sample_by_class(const std::vector<FlowRecord>& records,
                                        const std::map<std::string, double>& ratios,
                                        std::uint64_t rng_seed, const std::string& key_field) {
  ClassSampler sampler(ratios, key_field, rng_seed);
  std::vector<FlowRecord> kept;
  kept.reserve(records.size());
  for (const auto& record : records) {
    if (sampler.accept(record)) kept.push_back(record);
  }
  return kept;
}

FeatureVector preprocess(const FlowRecord& record, const IngestConfig& config) {
  FeatureVector out;
  out.record_id = record.record_id;
  out.values.reserve(config.feature_columns.size());
  for (const auto& column : config.feature_columns) {
    const FieldValue* value = record.find_field(column);
    if (!value)
      throw Error(Errc::missing_column, "record " + std::to_string(record.record_id) +
                                            " lacks column '" + column + "'");
    double x = 0.0;
    if (const auto* d = std::get_if<double>(value)) {
      x = *d;
    } else {
      const std::string& text = std::get<std::string>(*value);
      if (!try_parse_double(trim(text), x))
        throw Error(Errc::non_finite_value,
                    "column '" + column + "' value '" + text + "' is not numeric");
    }
    if (!std::isfinite(x))
      throw Error(Errc::non_finite_value, "column '" + column + "' is not finite");
    out.values.push_back(x);
  }
  return out;
}

ThreadedReader::ThreadedReader(std::unique_ptr<RecordReader> inner, std::size_t queue_capacity)
    : inner_(std::move(inner)), queue_(queue_capacity) {
  worker_ = std::thread([this] {
    try {
      while (auto record = inner_->next()) {
        if (!queue_.push(std::move(*record))) return;  // consumer closed
      }
    } catch (...) {
      std::lock_guard lock(error_mutex_);
      error_ = std::current_exception();
    }
    done_.store(true);
    queue_.close();
  });
}

ThreadedReader::~ThreadedReader() {
  queue_.close();
  if (worker_.joinable()) worker_.join();
}

std::optional<FlowRecord> ThreadedReader::next() {
  auto record = queue_.pop();
  if (record) return record;
  std::lock_guard lock(error_mutex_);
  if (error_) std::rethrow_exception(error_);
  return std::nullopt;
}

std::uint64_t ThreadedReader::records_dropped() const { return inner_->records_dropped(); }

}  // namespace flowal
