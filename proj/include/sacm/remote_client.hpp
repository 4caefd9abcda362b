/*
 * Copyright (c) 2026, The sacm Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "sacm/denoiser.hpp"
#include "sacm/error.hpp"
#include "sacm/types.hpp"
#include "sacm/wire.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>

namespace sacm {

/// Environment variable that overrides the configured remote endpoint.
inline constexpr const char* kEndpointEnv = "SACM_REMOTE_ENDPOINT";

struct Endpoint {
    std::string host;
    std::string port;

    std::string str() const { return host + ":" + port; }

    static Endpoint parse(const std::string& text) {
        const auto colon = text.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
            throw ConfigError("remote endpoint '" + text + "' is not host:port");
        }
        return {text.substr(0, colon), text.substr(colon + 1)};
    }
};

/// Endpoint from the environment override if set, else the configured one.
inline Endpoint resolve_endpoint(const std::string& configured) {
    if (const char* env = std::getenv(kEndpointEnv); env && *env) {
        return Endpoint::parse(env);
    }
    return Endpoint::parse(configured);
}

/// Owning file descriptor for a connected stream socket.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Socket() { reset(); }

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }

    void reset() noexcept {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

    static Socket connect_to(const Endpoint& ep, int timeout_seconds) {
        addrinfo hints{};
        hints.ai_family = AF_UNSPEC;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo* res = nullptr;
        if (const int rc = ::getaddrinfo(ep.host.c_str(), ep.port.c_str(), &hints, &res); rc != 0) {
            throw DenoiserError("cannot resolve " + ep.str() + ": " + ::gai_strerror(rc));
        }
        std::string last_error = "no addresses";
        Socket sock;
        for (auto* ai = res; ai; ai = ai->ai_next) {
            Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
            if (!s.valid()) {
                last_error = std::strerror(errno);
                continue;
            }
            if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
                sock = std::move(s);
                break;
            }
            last_error = std::strerror(errno);
        }
        ::freeaddrinfo(res);
        if (!sock.valid()) {
            throw DenoiserError("cannot connect to " + ep.str() + ": " + last_error);
        }
        if (timeout_seconds > 0) {
            timeval tv{};
            tv.tv_sec = timeout_seconds;
            ::setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
            ::setsockopt(sock.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
        }
        return sock;
    }

    void send_line(const std::string& line) {
        std::string buf = line;
        buf += '\n';
        std::size_t sent = 0;
        while (sent < buf.size()) {
            const auto n = ::send(fd_, buf.data() + sent, buf.size() - sent, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw DenoiserError(std::string("send failed: ") + std::strerror(errno));
            }
            sent += static_cast<std::size_t>(n);
        }
    }

    /// Reads up to the next newline. Returns false on clean EOF before any byte.
    bool recv_line(std::string& line) {
        line.clear();
        for (;;) {
            if (const auto nl = pending_.find('\n'); nl != std::string::npos) {
                line = pending_.substr(0, nl);
                pending_.erase(0, nl + 1);
                return true;
            }
            char chunk[4096];
            const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
            if (n == 0) {
                if (pending_.empty()) {
                    return false;
                }
                throw DenoiserError("connection closed mid-line");
            }
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                throw DenoiserError(std::string("receive failed: ") + std::strerror(errno));
            }
            pending_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    int fd_ = -1;
    std::string pending_;
};

/// Denoiser backed by a model server speaking the line-delimited wire
/// protocol. One connection per instance; requests are strictly sequential.
class RemoteDenoiser final : public Denoiser {
public:
    RemoteDenoiser(Endpoint endpoint, Vocabulary vocab, int timeout_seconds = 60)
        : endpoint_(std::move(endpoint)), vocab_(std::move(vocab)), timeout_(timeout_seconds) {
        vocab_.validate();
    }

    DenoiserResponse predict(const DenoiserRequest& request) override {
        if (!sock_.valid()) {
            sock_ = Socket::connect_to(endpoint_, timeout_);
        }
        const auto id = next_id_++;
        sock_.send_line(wire::encode_request(id, request));
        std::string line;
        if (!sock_.recv_line(line)) {
            sock_.reset();
            throw DenoiserError("server at " + endpoint_.str() + " closed the connection");
        }
        return wire::decode_response(line, id);
    }

    const Vocabulary& vocabulary() const override { return vocab_; }
    std::string identity() const override { return "remote"; }
    const Endpoint& endpoint() const noexcept { return endpoint_; }

private:
    Endpoint endpoint_;
    Vocabulary vocab_;
    int timeout_;
    Socket sock_;
    std::int64_t next_id_ = 1;
};

} // namespace sacm
