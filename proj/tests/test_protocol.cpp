#include <sstream>

#include "doctest.h"
#include "sillopt/protocol.hpp"

using namespace sill;
using namespace std::chrono_literals;

TEST_SUITE("protocol") {
  TEST_CASE("request and response lines round trip") {
    const EvaluationRequest req{"r-1", {1.5, 2.0, 2.2}};
    const auto line = encode_request(req);
    CHECK(line.find('\n') == std::string::npos);
    const auto back = decode_request(line);
    CHECK(back.id == "r-1");
    CHECK(back.t == req.t);

    EvaluationResponse resp{"r-1", ResponseStatus::Ok, ObjectiveTriple{800.5, 600.25, 14.5, 1e5}, std::nullopt};
    const auto rline = encode_response(resp);
    CHECK(rline.rfind("{\"id\":\"r-1\",\"status\":\"ok\",\"ea_ss\":", 0) == 0);
    const auto rback = decode_response(rline);
    CHECK(rback.objectives == resp.objectives);
    CHECK_FALSE(rback.message.has_value());
  }

  TEST_CASE("handle_request_line answers with the oracle and rejects bad input") {
    const auto c = default_oracle_config();
    const ThicknessVector mid = DesignSpace::side_sill().midpoint();
    const auto ok = handle_request_line(c, encode_request({"a", {mid.data(), mid.data() + 7}}));
    CHECK(ok.id == "a");
    CHECK(ok.status == ResponseStatus::Ok);
    CHECK(*ok.objectives == evaluate(c, mid));

    const auto arity = handle_request_line(c, R"({"id":"b","t":[1,2,3]})");
    CHECK(arity.id == "b");
    CHECK(arity.status == ResponseStatus::InvalidRequest);
    CHECK(arity.message.has_value());

    CHECK(handle_request_line(c, "not json").status == ResponseStatus::InvalidRequest);
    CHECK(handle_request_line(c, R"({"id":"c","t":"x"})").status == ResponseStatus::InvalidRequest);
  }

  TEST_CASE("serve_stream keeps request order and survives malformed lines") {
    const auto c = default_oracle_config();
    const ThicknessVector lo = DesignSpace::side_sill().lower();
    const ThicknessVector hi = DesignSpace::side_sill().upper();
    std::stringstream in;
    in << encode_request({"1", {lo.data(), lo.data() + 7}}) << '\n'
       << "garbage\n"
       << encode_request({"2", {hi.data(), hi.data() + 7}}) << '\n';
    std::stringstream out;
    serve_stream(c, in, out);
    std::string l1, l2, l3;
    std::getline(out, l1);
    std::getline(out, l2);
    std::getline(out, l3);
    CHECK(decode_response(l1).id == "1");
    CHECK(decode_response(l2).status == ResponseStatus::InvalidRequest);
    const auto r3 = decode_response(l3);
    CHECK(r3.id == "2");
    CHECK(*r3.objectives == evaluate(c, hi));
  }

  TEST_CASE("tcp loopback reproduces local evaluation bit for bit") {
    const auto c = default_oracle_config();
    EvaluationServer server(c);
    server.start();
    {
      ExternalClient client(server.endpoint(), 5s);
      std::mt19937_64 rng(1);
      for (int i = 0; i < 25; ++i) {
        const ThicknessVector t = random_grid_sample(DesignSpace::side_sill(), rng);
        CHECK(client.query(t) == evaluate(c, t));
      }
    }
    // Connections are served one at a time, so the first client must hang up first.
    CHECK(query_external(server.endpoint(), DesignSpace::side_sill().midpoint(), 5s) ==
          evaluate(c, DesignSpace::side_sill().midpoint()));
    server.stop();
    CHECK(server.requests_served() == 26);
  }

  TEST_CASE("error status is a non-retryable error carrying the server message") {
    EvaluationServer server(default_oracle_config());
    server.start();
    ExternalClient client(server.endpoint(), 5s);
    try {
      client.query(ThicknessVector::Constant(3, 2.0));
      FAIL("expected rejection");
    } catch (const EvaluatorRejected& e) {
      CHECK_FALSE(e.retryable());
      CHECK(e.status() == ResponseStatus::InvalidRequest);
    }
    // The connection stays usable.
    const ThicknessVector mid = DesignSpace::side_sill().midpoint();
    CHECK(client.query(mid) == evaluate(default_oracle_config(), mid));
  }

  TEST_CASE("unreachable endpoint times out") {
    std::uint16_t port;
    {
      EvaluationServer probe(default_oracle_config());
      port = probe.port();
    }
    try {
      query_external("tcp://127.0.0.1:" + std::to_string(port), DesignSpace::side_sill().midpoint(), 200ms);
      FAIL("expected timeout");
    } catch (const EvaluatorTimeout& e) {
      CHECK(e.retryable());
    }
  }

  TEST_CASE("slow server times out") {
    auto c = default_oracle_config();
    c.latency = 100ms;
    EvaluationServer server(c);
    server.start();
    CHECK_THROWS_AS(query_external(server.endpoint(), DesignSpace::side_sill().midpoint(), 10ms), EvaluatorTimeout);
    server.stop();
  }

  TEST_CASE("exec endpoint speaks the protocol over stdio") {
    const auto c = default_oracle_config();
    ExternalClient client(std::string("exec:") + SILLOPT_TOOL + " serve --stdio", 10s);
    const ThicknessVector t = DesignSpace::side_sill().upper();
    CHECK(client.query(t) == evaluate(c, t));
    CHECK(client.query(t) == evaluate(c, t));
  }
}
