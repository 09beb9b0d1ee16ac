#include "incrasat/harness/platform.hpp"

namespace incrasat::harness {

LocalPlatform::LocalPlatform(FleetConfig fleet, bridge::DaemonConfig daemon)
    : _fleet(std::make_unique<Fleet>(std::move(fleet))) {
    _daemon = bridge::attachDaemon(*_fleet, std::move(daemon));
    _fleet->start();
}

LocalPlatform::~LocalPlatform() { stop(); }

void LocalPlatform::stop() {
    if (_fleet) _fleet->stop();
    if (_daemon) _daemon->stop();
}

} // namespace incrasat::harness
