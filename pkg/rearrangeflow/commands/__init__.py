# Process exit codes shared by every command
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GENERATION_FAILURE = 2
EXIT_TIMEOUT = 3
EXIT_INFEASIBLE = 4
EXIT_INPUT_MISMATCH = 5


def register_commands(subparsers):
    from rearrangeflow.commands import bench, gen, solve, survey, viz

    for command in (gen, solve, bench, viz, survey):
        command.register(subparsers)
