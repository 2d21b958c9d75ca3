#pragma once

namespace dyncap {

/// Exit codes: 0 all runs converged, 2 some run did not converge (or a
/// verification check failed), 1 usage or configuration error.
int cli_main(int argc, char** argv);

}  // namespace dyncap
