#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "safesynth/geometry.hpp"

namespace safesynth {

/// A deterministic transition map that can only be queried.
class System {
 public:
  virtual ~System() = default;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual VectorXd Step(const VectorXd& x, const VectorXd& u) = 0;
  /// Safe to call Step concurrently from several threads.
  virtual bool reentrant() const { return false; }
  virtual std::string name() const = 0;
};

/// Single-room heater model:
///   x' = x + τ (α_e (T_e - x) + α_h (T_h - x) u).
struct RoomParameters {
  double ambient = 15.0;       // T_e
  double heater = 45.0;        // T_h
  double alpha_ambient = 8e-3;
  double alpha_heater = 3.6e-3;
  double sample_time = 5.0;    // τ
};

double StepRoom(double x, double u, const RoomParameters& params = {});

class RoomTemperatureSystem final : public System {
 public:
  explicit RoomTemperatureSystem(RoomParameters params = {}) : params_(params) {}
  int state_dim() const override { return 1; }
  int input_dim() const override { return 1; }
  VectorXd Step(const VectorXd& x, const VectorXd& u) override;
  bool reentrant() const override { return true; }
  std::string name() const override { return "room-temp"; }

 private:
  RoomParameters params_;
};

/// A plant run as a child process. Each query writes one line
/// `x_1 ... x_n u_1 ... u_m` to its stdin and reads one line
/// `x'_1 ... x'_n` from its stdout.
class ExternalProcessSystem final : public System {
 public:
  ExternalProcessSystem(std::string command, int state_dim, int input_dim);
  ~ExternalProcessSystem() override;
  ExternalProcessSystem(const ExternalProcessSystem&) = delete;
  ExternalProcessSystem& operator=(const ExternalProcessSystem&) = delete;

  int state_dim() const override { return n_; }
  int input_dim() const override { return m_; }
  VectorXd Step(const VectorXd& x, const VectorXd& u) override;
  std::string name() const override { return "external:" + command_; }

 private:
  std::string command_;
  int n_;
  int m_;
  int pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
};

struct Sample {
  VectorXd x;
  VectorXd u;
  VectorXd x_next;
};

enum class DatasetRole { kScenario, kValidation };

std::string ToString(DatasetRole role);
DatasetRole ParseDatasetRole(const std::string& text);

/// i.i.d. samples (x_k, u_k, f(x_k, u_k)) stored column-wise.
struct Dataset {
  MatrixXd states;       // n × N
  MatrixXd inputs;       // m × N
  MatrixXd next_states;  // n × N
  std::uint64_t seed = 0;
  DatasetRole role = DatasetRole::kScenario;
  Box space;             // X×U the pairs were drawn from

  int size() const { return static_cast<int>(states.cols()); }
  int state_dim() const { return static_cast<int>(states.rows()); }
  int input_dim() const { return static_cast<int>(inputs.rows()); }
  Sample sample(int k) const {
    return {states.col(k), inputs.col(k), next_states.col(k)};
  }
  bool operator==(const Dataset& other) const;
};

/// Draws `count` pairs uniformly from `space` and queries the system once
/// each. Sample k depends only on (seed, k). Reentrant systems are queried
/// from several threads.
Dataset Collect(System& system, const SampleSpace& space, int count, std::uint64_t seed,
                DatasetRole role = DatasetRole::kScenario);

/// CSV with a metadata comment header:
///   # n=1 m=1 role=scenario seed=42 count=3 space=22.5:26.5,0:1
///   x_1,...,x_n,u_1,...,u_m,x'_1,...,x'_n
void SaveDataset(const Dataset& data, const std::filesystem::path& path);
Dataset LoadDataset(const std::filesystem::path& path);

}  // namespace safesynth
