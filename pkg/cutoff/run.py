import sys

from . profile import cmd_profile
from . simulate import cmd_simulate
from . util import Settings, CutoffError, UsageError, ScheduleError, DomainError, SizeError, PreconditionError
from . verify import cmd_verify

COMMANDS = {
    'profile': cmd_profile,
    'verify': cmd_verify,
    'simulate': cmd_simulate,
}

# bad input of any kind exits 2; a failed gate or suite exits 1
USAGE_ERRORS = (UsageError, ScheduleError, DomainError, SizeError, PreconditionError)


def run(settings):
    try:
        return COMMANDS[settings.command](settings)
    finally:
        if settings.show_stats:
            settings.stats.show()


def main(argv=None):
    try:
        settings = Settings(cmd_line=True, argv=argv)
    except CutoffError as e:
        print(f'cutoff: {e}', file=sys.stderr)
        return 2
    try:
        return run(settings)
    except USAGE_ERRORS as e:
        settings.logger.error(f'{type(e).__name__}: {e}')
        return 2
    except CutoffError as e:
        settings.logger.error(f'{type(e).__name__}: {e}')
        return 1
