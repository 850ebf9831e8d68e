#pragma once

// HTTP front ends: the corpus/task/worker API over a Service, and a
// standalone mock annotation worker speaking the worker wire protocol.

#include <memory>
#include <string>
#include <thread>

#include "corpusflow/mock_worker.hpp"
#include "corpusflow/service.hpp"

namespace httplib {
class Server;
}

namespace corpusflow::http {

class HttpServer {
 public:
  virtual ~HttpServer();

  // Port 0 picks a free port. Returns the bound port; throws on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  // bind() must have succeeded.
  void start_background();
  void stop();

 protected:
  HttpServer();
  httplib::Server& server() { return *server_; }

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

class ApiServer : public HttpServer {
 public:
  explicit ApiServer(Service& service);
  ~ApiServer() override { stop(); }

 private:
  Service& service_;
};

class MockWorkerServer : public HttpServer {
 public:
  explicit MockWorkerServer(mock::MockWorker worker = mock::MockWorker());
  ~MockWorkerServer() override { stop(); }

 private:
  mock::MockWorker worker_;
};

}  // namespace corpusflow::http
