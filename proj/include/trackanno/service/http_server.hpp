#pragma once

#include <memory>
#include <ostream>
#include <string>
#include <thread>

#include "trackanno/service/review_service.hpp"

namespace trackanno::service {

/// JSON-over-HTTP binding of a ReviewService (see docs/review_api.md).
class HttpReviewServer {
 public:
  explicit HttpReviewServer(ReviewService& svc);
  ~HttpReviewServer();
  HttpReviewServer(const HttpReviewServer&) = delete;
  HttpReviewServer& operator=(const HttpReviewServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serve on a background thread until stop().
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Serves the review API until the operator finishes the iteration's
/// tracklets or closes every session.
ReviewDriver interactive_operator(std::string host, int port, std::ostream& log);

}  // namespace trackanno::service
