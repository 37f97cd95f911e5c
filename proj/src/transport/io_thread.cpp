#include "vlmedge/transport/io_thread.hpp"

namespace vlmedge::transport {

IoThread::IoThread()
    : guard_(boost::asio::make_work_guard(context_)), thread_([this] { context_.run(); }) {}

IoThread::~IoThread() { stop(); }

void IoThread::stop() {
  guard_.reset();
  context_.stop();
  if (thread_.joinable()) {
    if (thread_.get_id() == std::this_thread::get_id()) {
      thread_.detach();
    } else {
      thread_.join();
    }
  }
}

}  // namespace vlmedge::transport
