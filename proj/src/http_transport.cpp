#include <httplib.h>

#include "codeslice/api_client.hpp"

namespace codeslice {

namespace {

template <typename Send>
HttpResult perform(const std::string &url, int timeout_ms, Send send) {
    HttpResult out;
    const auto parsed = parse_url(url);
    if (!parsed) {
        out.error = "malformed URL " + url;
        return out;
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (parsed->scheme == "https") {
        out.error = "https endpoints need a build with OpenSSL support";
        return out;
    }
#endif
    httplib::Client client(parsed->scheme + "://" + parsed->host + ":" + std::to_string(parsed->port));
    const auto sec = timeout_ms / 1000;
    const auto usec = (timeout_ms % 1000) * 1000;
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    auto res = send(client, parsed->path);
    if (!res) {
        const auto err = res.error();
        out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
        out.error = httplib::to_string(err);
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

} // namespace

HttpResult HttplibTransport::post(const std::string &url, const std::map<std::string, std::string> &headers,
                                  const std::string &body, int timeout_ms) {
    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto &[k, v] : headers) {
        if (k == "Content-Type") {
            content_type = v;
        } else {
            h.emplace(k, v);
        }
    }
    return perform(url, timeout_ms, [&](httplib::Client &client, const std::string &path) {
        return client.Post(path, h, body, content_type);
    });
}

HttpResult HttplibTransport::get(const std::string &url, int timeout_ms) {
    return perform(url, timeout_ms, [](httplib::Client &client, const std::string &path) { return client.Get(path); });
}

} // namespace codeslice
