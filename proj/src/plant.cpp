#include "safesynth/plant.hpp"

#include <algorithm>
#include <charconv>
#include <csignal>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "safesynth/errors.hpp"
#include "safesynth/io.hpp"

namespace safesynth {

double StepRoom(double x, double u, const RoomParameters& p) {
  return x + p.sample_time * (p.alpha_ambient * (p.ambient - x) +
                              p.alpha_heater * (p.heater - x) * u);
}

VectorXd RoomTemperatureSystem::Step(const VectorXd& x, const VectorXd& u) {
  if (x.size() != 1 || u.size() != 1) {
    throw std::invalid_argument("room-temp: expects one state and one input");
  }
  VectorXd next(1);
  next[0] = StepRoom(x[0], u[0], params_);
  return next;
}

ExternalProcessSystem::ExternalProcessSystem(std::string command, int state_dim, int input_dim)
    : command_(std::move(command)), n_(state_dim), m_(input_dim) {
  if (n_ < 1 || m_ < 1) throw std::invalid_argument("external plant: dimensions must be >= 1");
  int in_pipe[2];   // parent writes, child reads
  int out_pipe[2];  // child writes, parent reads
  if (pipe(in_pipe) != 0) throw std::runtime_error("external plant: pipe() failed");
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw std::runtime_error("external plant: pipe() failed");
  }
  pid_ = fork();
  if (pid_ < 0) throw std::runtime_error("external plant: fork() failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = fdopen(in_pipe[1], "w");
  from_child_ = fdopen(out_pipe[0], "r");
  // A dead child must surface as a read error, not kill the tool.
  std::signal(SIGPIPE, SIG_IGN);
}

ExternalProcessSystem::~ExternalProcessSystem() {
  if (to_child_ != nullptr) std::fclose(to_child_);
  if (from_child_ != nullptr) std::fclose(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

VectorXd ExternalProcessSystem::Step(const VectorXd& x, const VectorXd& u) {
  if (x.size() != n_ || u.size() != m_) {
    throw std::invalid_argument("external plant: dimension mismatch");
  }
  for (int i = 0; i < n_; ++i) std::fprintf(to_child_, i == 0 ? "%.17g" : " %.17g", x[i]);
  for (int i = 0; i < m_; ++i) std::fprintf(to_child_, " %.17g", u[i]);
  std::fputc('\n', to_child_);
  if (std::fflush(to_child_) != 0) throw std::runtime_error("external plant: write failed");

  std::string line;
  int ch;
  while ((ch = std::fgetc(from_child_)) != EOF && ch != '\n') line.push_back(static_cast<char>(ch));
  if (ch == EOF && line.empty()) throw std::runtime_error("external plant: no reply (process exited?)");
  std::istringstream in(line);
  VectorXd next(n_);
  for (int i = 0; i < n_; ++i) {
    if (!(in >> next[i])) throw std::runtime_error("external plant: malformed reply '" + line + "'");
  }
  return next;
}

std::string ToString(DatasetRole role) {
  return role == DatasetRole::kScenario ? "scenario" : "validation";
}

DatasetRole ParseDatasetRole(const std::string& text) {
  if (text == "scenario") return DatasetRole::kScenario;
  if (text == "validation") return DatasetRole::kValidation;
  throw std::invalid_argument("unknown dataset role '" + text + "'");
}

bool Dataset::operator==(const Dataset& other) const {
  return seed == other.seed && role == other.role && space == other.space &&
         states.rows() == other.states.rows() && states.cols() == other.states.cols() &&
         inputs.rows() == other.inputs.rows() && states == other.states &&
         inputs == other.inputs && next_states == other.next_states;
}

Dataset Collect(System& system, const SampleSpace& space, int count, std::uint64_t seed,
                DatasetRole role) {
  if (count < 1) throw std::invalid_argument("Collect: count must be >= 1");
  const int n = system.state_dim();
  const int m = system.input_dim();
  if (space.dim() != n + m) throw std::invalid_argument("Collect: space dimension != n + m");
  Dataset data;
  data.states.resize(n, count);
  data.inputs.resize(m, count);
  data.next_states.resize(n, count);
  data.seed = seed;
  data.role = role;
  data.space = space.box();

  std::mutex mu;
  std::optional<CollectionError> failure;
  auto work = [&](int begin, int end) {
    for (int k = begin; k < end; ++k) {
      const VectorXd p = SampleUniformAt(space.box(), seed, static_cast<std::uint64_t>(k));
      data.states.col(k) = p.head(n);
      data.inputs.col(k) = p.tail(m);
      try {
        VectorXd next = system.Step(p.head(n), p.tail(m));
        if (next.size() != n) throw std::runtime_error("simulator returned wrong dimension");
        data.next_states.col(k) = next;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure || failure->index() > k) failure.emplace(k, e.what());
        return;
      }
    }
  };

  const int workers =
      system.reentrant() ? std::max(1, static_cast<int>(std::thread::hardware_concurrency())) : 1;
  if (workers == 1 || count < 4096) {
    work(0, count);
  } else {
    std::vector<std::jthread> pool;
    const int chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(count, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
  }
  if (failure) throw *failure;
  return data;
}

namespace {

double ParseDouble(std::string_view text, int line) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(line, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string_view> Split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                      : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

void SaveDataset(const Dataset& data, const std::filesystem::path& path) {
  std::ostringstream out;
  out << "# n=" << data.state_dim() << " m=" << data.input_dim()
      << " role=" << ToString(data.role) << " seed=" << data.seed << " count=" << data.size();
  if (data.space.dim() > 0) {
    out << " space=";
    for (int i = 0; i < data.space.dim(); ++i) {
      out << (i ? "," : "") << FormatExact(data.space.lower()[i]) << ':'
          << FormatExact(data.space.upper()[i]);
    }
  }
  out << '\n';
  for (int k = 0; k < data.size(); ++k) {
    std::string row;
    auto put = [&](double v) {
      if (!row.empty()) row.push_back(',');
      row += FormatExact(v);
    };
    for (int i = 0; i < data.state_dim(); ++i) put(data.states(i, k));
    for (int i = 0; i < data.input_dim(); ++i) put(data.inputs(i, k));
    for (int i = 0; i < data.state_dim(); ++i) put(data.next_states(i, k));
    out << row << '\n';
  }
  WriteFileAtomic(path, out.str());
}

Dataset LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.empty()) throw ParseError(1, "empty dataset file");
  if (text.back() != '\n') {
    const int lines = static_cast<int>(std::count(text.begin(), text.end(), '\n')) + 1;
    throw ParseError(lines, "truncated final line");
  }

  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  if (line.rfind("# ", 0) != 0) throw ParseError(1, "missing '# n=.. m=..' header");
  int n = -1, m = -1;
  long expected = -1;
  Dataset data;
  std::optional<std::string> space_text;
  std::istringstream header(line.substr(2));
  std::string token;
  while (header >> token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos) throw ParseError(1, "bad header token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "n") n = std::stoi(value);
      else if (key == "m") m = std::stoi(value);
      else if (key == "role") data.role = ParseDatasetRole(value);
      else if (key == "seed") data.seed = std::stoull(value);
      else if (key == "count") expected = std::stol(value);
      else if (key == "space") space_text = value;
      else throw ParseError(1, "unknown header key '" + key + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(1, "bad value for '" + key + "': " + e.what());
    }
  }
  if (n < 1 || m < 1) throw ParseError(1, "header must declare n >= 1 and m >= 1");

  std::vector<double> values;
  int line_no = 1;
  long rows = 0;
  const int width = 2 * n + m;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = Split(line, ',');
    if (static_cast<int>(fields.size()) != width) {
      throw ParseError(line_no, "expected " + std::to_string(width) + " columns, got " +
                                    std::to_string(fields.size()));
    }
    for (auto f : fields) values.push_back(ParseDouble(f, line_no));
    ++rows;
  }
  if (expected >= 0 && rows != expected) {
    throw ParseError(line_no, "header declares " + std::to_string(expected) + " rows, found " +
                                  std::to_string(rows));
  }
  data.states.resize(n, rows);
  data.inputs.resize(m, rows);
  data.next_states.resize(n, rows);
  for (long k = 0; k < rows; ++k) {
    const double* r = values.data() + k * width;
    for (int i = 0; i < n; ++i) data.states(i, k) = r[i];
    for (int i = 0; i < m; ++i) data.inputs(i, k) = r[n + i];
    for (int i = 0; i < n; ++i) data.next_states(i, k) = r[n + m + i];
  }
  if (space_text) {
    const auto axes = Split(*space_text, ',');
    if (static_cast<int>(axes.size()) != n + m) {
      throw ParseError(1, "space has " + std::to_string(axes.size()) + " axes, expected n + m");
    }
    VectorXd lo(n + m), hi(n + m);
    for (int i = 0; i < n + m; ++i) {
      const auto bounds = Split(axes[i], ':');
      if (bounds.size() != 2) throw ParseError(1, "space axis must be lower:upper");
      lo[i] = ParseDouble(bounds[0], 1);
      hi[i] = ParseDouble(bounds[1], 1);
    }
    try {
      data.space = Box(lo, hi);
    } catch (const std::exception& e) {
      throw ParseError(1, e.what());
    }
  } else if (rows > 0) {
    MatrixXd pairs(n + m, rows);
    pairs << data.states, data.inputs;
    data.space = Box(pairs.rowwise().minCoeff(), pairs.rowwise().maxCoeff());
  }
  return data;
}

}  // namespace safesynth
