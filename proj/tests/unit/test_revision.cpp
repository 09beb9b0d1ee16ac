#include "doctest.h"

#include "incrasat/model/payload_codec.hpp"
#include "incrasat/node/messages.hpp"
#include "incrasat/revision/lifecycle.hpp"

using namespace incrasat;
using namespace incrasat::revision;

namespace {

RevisionPayload payload(uint32_t rev) {
    return {rev, {{static_cast<Literal>(rev + 1)}}, {}, rev + 1};
}

} // namespace

TEST_CASE("submission is gapless and gated on the previous revision") {
    JobLifecycle job({"j", 1});
    CHECK(job.status() == JobStatus::IDLE_BETWEEN_REVISIONS);
    CHECK_FALSE(job.currentRevision());
    CHECK_THROWS_AS(job.submit(payload(1)), ProtocolError);
    job.submit(payload(0));
    CHECK(job.status() == JobStatus::SOLVING);
    CHECK_THROWS_AS(job.submit(payload(1)), ProtocolError);
    CHECK(job.conclude(0, SolveOutcome::sat({1})) == ResultDisposition::ACCEPTED);
    job.submit(payload(1));
    CHECK(job.conclude(1, SolveOutcome::sat({1, 2})) == ResultDisposition::ACCEPTED);
    job.submit(payload(2));
    CHECK(*job.currentRevision() == 2);
    CHECK_THROWS_WITH_AS(job.submit(payload(3)), doctest::Contains("previous revision has not finished"),
                         ProtocolError);
}

TEST_CASE("first result wins and stale results are audited") {
    JobLifecycle job({"j", 1});
    job.submit(payload(0));
    job.conclude(0, SolveOutcome::sat({1}));
    job.submit(payload(1));
    job.conclude(1, SolveOutcome::unsat({}));
    job.submit(payload(2));
    CHECK(job.conclude(1, SolveOutcome::sat({1, 2})) == ResultDisposition::STALE);
    CHECK(job.status() == JobStatus::SOLVING);
    CHECK(job.conclude(2, SolveOutcome::unsat({})) == ResultDisposition::ACCEPTED);
    CHECK(job.conclude(2, SolveOutcome::sat({1, 2, 3})) == ResultDisposition::DUPLICATE);
    CHECK(job.lastOutcome()->verdict == Verdict::UNSAT);
    CHECK(job.audit().size() == 2);
}

TEST_CASE("cancel concludes with UNKNOWN and is a no-op otherwise") {
    JobLifecycle job({"j", 1});
    CHECK_FALSE(job.cancel());
    job.submit(payload(0));
    job.conclude(0, SolveOutcome::sat({1}));
    job.submit(payload(1));
    CHECK(job.cancel());
    CHECK(job.status() == JobStatus::CONCLUDED);
    CHECK(job.lastOutcome()->verdict == Verdict::UNKNOWN);
    CHECK_FALSE(job.cancel());
    CHECK_NOTHROW(job.submit(payload(2)));
}

TEST_CASE("finalize is rejected while solving") {
    JobLifecycle job({"j", 1});
    job.submit(payload(0));
    CHECK_THROWS_AS(job.finalize(), ProtocolError);
    job.cancel();
    job.finalize();
    CHECK(job.status() == JobStatus::FINALIZED);
    CHECK(job.doneSignalSeen());
    CHECK_THROWS_AS(job.submit(payload(1)), ProtocolError);
    JobLifecycle never({"k", 2});
    CHECK_NOTHROW(never.finalize());
}

TEST_CASE("job node accepts payloads strictly in order") {
    JobNode node(1, 0);
    CHECK(node.receivedUpTo() == -1);
    CHECK_FALSE(node.receivePayload(payload(1)));
    CHECK(node.receivePayload(payload(0)));
    CHECK_FALSE(node.receivePayload(payload(0)));
    CHECK(node.receivePayload(payload(1)));
    CHECK(node.receivedUpTo() == 1);
}

TEST_CASE("solving is deferred until the target payload has arrived") {
    JobNode node(1, 3);
    node.setState(sched::NodeState::ACTIVE);
    node.receivePayload(payload(0));
    node.receivePayload(payload(1));
    node.setTarget(2);
    CHECK_FALSE(node.readyFor(2));
    CHECK_FALSE(node.wantsToSolve());
    node.receivePayload(payload(2));
    CHECK(node.wantsToSolve());
    node.markConcluded(2);
    CHECK_FALSE(node.wantsToSolve());
}

TEST_CASE("payload propagation sends exactly the missing revisions in order") {
    JobNode root(7, 0);
    root.setState(sched::NodeState::ACTIVE);
    for (uint32_t r = 0; r <= 1; r++) root.receivePayload(payload(r));
    root.setTreeHosts({0, 4, 5});
    auto first = root.propagatePayloads(0);
    CHECK(first.size() == 4);
    CHECK(root.forwardedTo(1) == 1);
    CHECK(root.forwardedTo(2) == 1);
    CHECK(root.propagatePayloads(0).empty());

    root.receivePayload(payload(2));
    root.receivePayload(payload(3));
    // Child 2 leaves the tree, child 1 stays.
    root.setTreeHosts({0, 4});
    auto second = root.propagatePayloads(0);
    REQUIRE(second.size() == 2);
    for (size_t i = 0; i < 2; i++) {
        CHECK(second[i].dest == 4);
        CHECK(second[i].tag == Tag::PAYLOAD_CHUNK);
        auto msg = PayloadMsg::decode(second[i].body);
        CHECK(msg.job == 7);
        CHECK(msg.index == 1);
        CHECK(decodePayload(msg.payload) == payload(2 + i));
    }

    // The suspended child resumes at watermark 1 and gets P_2, P_3.
    root.setTreeHosts({0, 4, 5});
    auto third = root.propagatePayloads(0);
    REQUIRE(third.size() == 2);
    CHECK(decodePayload(PayloadMsg::decode(third[0].body).payload).revision == 2);
    CHECK(decodePayload(PayloadMsg::decode(third[1].body).payload).revision == 3);
    CHECK(third[0].dest == 5);

    JobNode suspended(7, 1);
    suspended.setState(sched::NodeState::SUSPENDED);
    suspended.receivePayload(payload(0));
    suspended.setTreeHosts({0, 4, 5, 6});
    CHECK(suspended.propagatePayloads(4).empty());
}
