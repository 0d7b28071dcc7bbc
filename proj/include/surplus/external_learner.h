#ifndef SURPLUS_EXTERNAL_LEARNER_H_
#define SURPLUS_EXTERNAL_LEARNER_H_

// Client side of the external-learner protocol: line-delimited JSON over a
// child process's stdin/stdout.
//
//   -> {"cmd":"fit","id":1,"X":[[...]],"y":[...],"mask":[...],"seed":7,
//       "hyperparams":{...}}
//   <- {"id":1,"ok":true}
//   -> {"cmd":"predict","id":2,"X":[[...]]}
//   <- {"id":2,"yhat":[...]}
//   -> {"cmd":"shutdown"}
//
// X is row-major. One fitted model per process.

#include <chrono>
#include <cstddef>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <sys/types.h>

#include "json.hpp"
#include "surplus/learner.h"

namespace surplus {

class LearnerProcess {
 public:
  LearnerProcess(const std::string& command, std::chrono::milliseconds timeout);
  ~LearnerProcess();
  LearnerProcess(const LearnerProcess&) = delete;
  LearnerProcess& operator=(const LearnerProcess&) = delete;

  // Sends `message` with a fresh "id" and returns the reply carrying that id.
  // Throws ProtocolError (with transcript) on timeout, EOF, malformed reply,
  // id mismatch or an error reply.
  nlohmann::json request(nlohmann::json message);

  // Sends shutdown and reaps the child. Idempotent.
  void shutdown();

  std::string transcript() const;

 private:
  void send_line(const std::string& line);
  std::string read_line();
  [[noreturn]] void fail(const std::string& what) const;
  void record(const char* direction, const std::string& line);

  std::string command_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  long next_id_ = 1;
  std::deque<std::string> transcript_;
};

// Predictions delegated to a live learner process.
class ExternalPredictor : public Predictor {
 public:
  ExternalPredictor(std::unique_ptr<LearnerProcess> process, CoalitionMask mask)
      : process_(std::move(process)), mask_(std::move(mask)) {}

  void predict(const Matrix& x, std::span<const std::size_t> rows,
               std::span<double> out) const override;

 private:
  std::unique_ptr<LearnerProcess> process_;
  CoalitionMask mask_;
  mutable std::mutex mu_;
};

// Spawns a process and sends it the fit request. Masked-out columns are sent
// as zeros along with the mask, so the server cannot depend on them.
std::shared_ptr<const ExternalPredictor> fit_external(
    const ExternalEndpoint& endpoint, std::uint64_t seed, const Dataset& ds,
    std::span<const std::size_t> rows, const CoalitionMask& mask);

// Row-major JSON rendering of x's `rows` with masked-out columns zeroed.
nlohmann::json rows_to_json(const Matrix& x, std::span<const std::size_t> rows,
                            const CoalitionMask& mask);

}  // namespace surplus

#endif  // SURPLUS_EXTERNAL_LEARNER_H_
