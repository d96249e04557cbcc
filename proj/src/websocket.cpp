#include "irrigation/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <random>

namespace irrigation::ws {

namespace {

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxPayload = 1 << 20;
constexpr std::size_t kMaxHeadBytes = 16 * 1024;

std::string base64(const unsigned char* data, std::size_t len) {
  std::string out(4 * ((len + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data,
                                static_cast<int>(len));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Reads until "\r\n\r\n"; returns the head and leaves the rest in leftover.
std::optional<std::string> read_head(const net::Socket& socket, std::string& leftover) {
  std::string buf = std::move(leftover);
  leftover.clear();
  char chunk[2048];
  for (;;) {
    if (const std::size_t end = buf.find("\r\n\r\n"); end != std::string::npos) {
      leftover = buf.substr(end + 4);
      buf.resize(end);
      return buf;
    }
    if (buf.size() > kMaxHeadBytes) return std::nullopt;
    std::size_t n = 0;
    try {
      n = socket.receive(chunk, sizeof chunk);
    } catch (const net::NetError&) {
      return std::nullopt;
    }
    if (n == 0) return std::nullopt;
    buf.append(chunk, n);
  }
}

}  // namespace

std::string accept_key(std::string_view client_key) {
  std::string material(client_key);
  material += kGuid;
  std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
  SHA1(reinterpret_cast<const unsigned char*>(material.data()), material.size(), digest.data());
  return base64(digest.data(), digest.size());
}

std::string encode_frame(Opcode opcode, std::string_view payload,
                         std::optional<std::uint32_t> mask) {
  std::string out;
  out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(opcode)));
  const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
  const std::size_t len = payload.size();
  if (len < 126) {
    out.push_back(static_cast<char>(mask_bit | len));
  } else if (len <= 0xFFFF) {
    out.push_back(static_cast<char>(mask_bit | 126));
    out.push_back(static_cast<char>((len >> 8) & 0xFF));
    out.push_back(static_cast<char>(len & 0xFF));
  } else {
    out.push_back(static_cast<char>(mask_bit | 127));
    for (int shift = 56; shift >= 0; shift -= 8) {
      out.push_back(static_cast<char>((static_cast<std::uint64_t>(len) >> shift) & 0xFF));
    }
  }
  if (!mask) {
    out.append(payload);
    return out;
  }
  const std::array<char, 4> key = {static_cast<char>(*mask >> 24), static_cast<char>(*mask >> 16),
                                   static_cast<char>(*mask >> 8), static_cast<char>(*mask)};
  out.append(key.begin(), key.end());
  for (std::size_t i = 0; i < len; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
  return out;
}

bool FrameReader::fill(std::size_t want) {
  char chunk[4096];
  while (buffer_.size() < want) {
    std::size_t n = 0;
    try {
      n = socket_.receive(chunk, sizeof chunk);
    } catch (const net::NetError&) {
      return false;
    }
    if (n == 0) return false;
    buffer_.append(chunk, n);
  }
  return true;
}

std::optional<Frame> FrameReader::next() {
  if (!fill(2)) return std::nullopt;
  const auto b0 = static_cast<std::uint8_t>(buffer_[0]);
  const auto b1 = static_cast<std::uint8_t>(buffer_[1]);
  std::size_t header = 2;
  std::uint64_t len = b1 & 0x7F;
  if (len == 126) {
    header += 2;
    if (!fill(header)) return std::nullopt;
    len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(buffer_[2])) << 8) |
          static_cast<std::uint8_t>(buffer_[3]);
  } else if (len == 127) {
    header += 8;
    if (!fill(header)) return std::nullopt;
    len = 0;
    for (std::size_t i = 0; i < 8; ++i) len = (len << 8) | static_cast<std::uint8_t>(buffer_[2 + i]);
  }
  if (len > kMaxPayload) return std::nullopt;
  const bool masked = (b1 & 0x80) != 0;
  const std::size_t key_at = header;
  if (masked) header += 4;
  if (!fill(header + len)) return std::nullopt;

  Frame frame;
  frame.fin = (b0 & 0x80) != 0;
  frame.opcode = static_cast<Opcode>(b0 & 0x0F);
  frame.payload = buffer_.substr(header, len);
  if (masked) {
    for (std::size_t i = 0; i < frame.payload.size(); ++i) frame.payload[i] ^= buffer_[key_at + i % 4];
  }
  buffer_.erase(0, header + len);
  return frame;
}

std::optional<HttpRequestHead> read_request_head(const net::Socket& socket, std::string& leftover) {
  const auto head = read_head(socket, leftover);
  if (!head) return std::nullopt;

  HttpRequestHead req;
  std::string_view text = *head;
  const std::size_t eol = text.find("\r\n");
  const std::string_view request_line = text.substr(0, eol);
  const std::size_t sp1 = request_line.find(' ');
  const std::size_t sp2 = request_line.find(' ', sp1 + 1);
  if (sp1 == std::string_view::npos || sp2 == std::string_view::npos) return std::nullopt;
  req.method = std::string(request_line.substr(0, sp1));
  req.path = std::string(request_line.substr(sp1 + 1, sp2 - sp1 - 1));

  text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 2);
  while (!text.empty()) {
    const std::size_t e = text.find("\r\n");
    const std::string_view line = text.substr(0, e);
    text = e == std::string_view::npos ? std::string_view{} : text.substr(e + 2);
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string name = lower(trim(line.substr(0, colon)));
    const std::string_view value = trim(line.substr(colon + 1));
    if (name == "sec-websocket-key") req.websocket_key = std::string(value);
    if (name == "upgrade" && lower(value) == "websocket") req.upgrade_websocket = true;
  }
  return req;
}

ClientConnection connect(const std::string& host, std::uint16_t port, const std::string& path) {
  ClientConnection conn{net::connect_tcp(host, port), {}};
  std::random_device rd;
  std::array<unsigned char, 16> nonce{};
  for (auto& b : nonce) b = static_cast<unsigned char>(rd());
  const std::string key = base64(nonce.data(), nonce.size());
  conn.socket.send_all("GET " + path + " HTTP/1.1\r\nHost: " + host + ":" + std::to_string(port) +
                       "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                       "\r\nSec-WebSocket-Version: 13\r\n\r\n");
  const auto head = read_head(conn.socket, conn.pending);
  if (!head || head->rfind("HTTP/1.1 101", 0) != 0) {
    throw net::NetError("websocket upgrade rejected");
  }
  if (lower(*head).find(lower(accept_key(key))) == std::string::npos) {
    throw net::NetError("websocket accept key mismatch");
  }
  return conn;
}

// --- BroadcastHub -----------------------------------------------------------

void BroadcastHub::enqueue(Client& client, std::string frame) {
  {
    std::lock_guard lock(client.mutex);
    if (client.closed) return;
    if (client.outbox.size() >= kMaxOutbox) client.outbox.pop_front();
    client.outbox.push_back(std::move(frame));
  }
  client.cv.notify_one();
}

void BroadcastHub::close_client(Client& client) {
  {
    std::lock_guard lock(client.mutex);
    client.closed = true;
  }
  client.cv.notify_one();
}

void BroadcastHub::add(net::Socket socket, std::string pending, std::string greeting) {
  std::lock_guard lock(mutex_);
  if (stopped_) return;
  reap_locked();
  auto client = std::make_unique<Client>();
  client->socket = std::move(socket);
  client->outbox.push_back(encode_frame(Opcode::Text, greeting));
  Client* c = client.get();

  c->writer = std::thread([c] {
    for (;;) {
      std::string frame;
      {
        std::unique_lock lock(c->mutex);
        c->cv.wait(lock, [c] { return c->closed || !c->outbox.empty(); });
        if (c->outbox.empty()) break;
        frame = std::move(c->outbox.front());
        c->outbox.pop_front();
      }
      try {
        c->socket.send_all(frame);
      } catch (const net::NetError&) {
        break;
      }
      if (!frame.empty() && (static_cast<std::uint8_t>(frame[0]) & 0x0F) ==
                                static_cast<std::uint8_t>(Opcode::Close)) {
        break;
      }
    }
    close_client(*c);
    c->socket.shutdown();
  });

  c->reader = std::thread([c, pending = std::move(pending)]() mutable {
    FrameReader reader(c->socket, std::move(pending));
    while (auto frame = reader.next()) {
      if (frame->opcode == Opcode::Close) {
        enqueue(*c, encode_frame(Opcode::Close, {}));
        break;
      }
      if (frame->opcode == Opcode::Ping) enqueue(*c, encode_frame(Opcode::Pong, frame->payload));
    }
    close_client(*c);
  });

  clients_.push_back(std::move(client));
}

void BroadcastHub::broadcast(const std::string& message) {
  const std::string frame = encode_frame(Opcode::Text, message);
  std::lock_guard lock(mutex_);
  reap_locked();
  for (auto& c : clients_) enqueue(*c, frame);
}

void BroadcastHub::reap_locked() {
  for (auto it = clients_.begin(); it != clients_.end();) {
    bool closed = false;
    {
      std::lock_guard lock((*it)->mutex);
      closed = (*it)->closed;
    }
    if (!closed) {
      ++it;
      continue;
    }
    (*it)->socket.shutdown();
    if ((*it)->writer.joinable()) (*it)->writer.join();
    if ((*it)->reader.joinable()) (*it)->reader.join();
    it = clients_.erase(it);
  }
}

void BroadcastHub::stop() {
  std::list<std::unique_ptr<Client>> clients;
  {
    std::lock_guard lock(mutex_);
    stopped_ = true;
    clients.swap(clients_);
  }
  for (auto& c : clients) {
    close_client(*c);
    c->socket.shutdown();
  }
  for (auto& c : clients) {
    if (c->writer.joinable()) c->writer.join();
    if (c->reader.joinable()) c->reader.join();
  }
}

std::size_t BroadcastHub::client_count() {
  std::lock_guard lock(mutex_);
  reap_locked();
  return clients_.size();
}

}  // namespace irrigation::ws
