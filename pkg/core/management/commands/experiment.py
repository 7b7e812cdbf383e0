"""
Flagforge — Run a parameter sweep and write a CSV report.
Run: python manage.py experiment --kind grid --point "k=1;l=1" --point "k=4;l=2" --out report.csv
     python manage.py experiment --kind bundle --fixed b=4 --point N=16 --point N=64 --fit N
"""

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from core.conf import default_seed
from core.exceptions import FlagforgeError
from core.services.codec import EXPERIMENT_COLUMNS, write_experiment_csv
from core.services.experiments import fit_exponent, run_experiment
from core.utils.validation import parse_assignments
from core.validators import CONSTRUCTION_PARAMETERS, validate_construction_parameters


class Command(BaseCommand):
    help = (
        'Build, count and bound every schedule point. CSV columns: '
        f'{",".join(EXPERIMENT_COLUMNS)}. Counts are exact decimal integers; '
        'parameters and bounds are written as name=value pairs separated by ";".'
    )

    def add_arguments(self, parser):
        parser.add_argument('--kind', required=True, choices=sorted(CONSTRUCTION_PARAMETERS))
        parser.add_argument('--point', action='append', default=[], metavar='"NAME=VALUE;..."',
                            help='One schedule point, repeatable')
        parser.add_argument('--fixed', action='append', default=[], metavar='NAME=VALUE',
                            help='Parameter shared by every point')
        parser.add_argument('--seed', type=int, default=None, help='Base seed; point i uses seed + i')
        parser.add_argument('--workers', type=int, default=None, help='Process pool size (default: FLAGFORGE_WORKERS)')
        parser.add_argument('--out', default=None, help='CSV path (default: stdout)')
        parser.add_argument('--timing', action='store_true',
                            help='Fill the wall_time column (output is then no longer byte-reproducible)')
        parser.add_argument('--fit', default=None, metavar='X',
                            help='Fit log(count) against log(X): count, flats, size:<i>, param:<name>, ...')

    def handle(self, *args, **options):
        kind = options['kind']
        seed = options['seed'] if options['seed'] is not None else default_seed()
        try:
            fixed = parse_assignments(options['fixed'])
            schedule = []
            for point in options['point'] or ['']:
                raw = dict(fixed)
                raw.update(parse_assignments(p for p in point.split(';') if p.strip()))
                schedule.append(validate_construction_parameters(kind, raw))
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages)) from exc

        try:
            rows = run_experiment(kind, schedule, seed=seed, workers=options['workers'])
        except FlagforgeError as exc:
            raise CommandError(str(exc)) from exc

        if options['out']:
            with open(options['out'], 'w', encoding='utf-8', newline='') as stream:
                write_experiment_csv(rows, stream, timing=options['timing'])
            self.stdout.write(self.style.SUCCESS(f'{len(rows)} row(s) written to {options["out"]}'))
        else:
            write_experiment_csv(rows, self.stdout, timing=options['timing'])

        skipped = sum(1 for row in rows if row.skipped)
        if skipped:
            self.stdout.write(self.style.WARNING(f'{skipped} point(s) skipped (cap or genericity)'))

        if options['fit']:
            try:
                fit = fit_exponent(rows, options['fit'])
            except FlagforgeError as exc:
                raise CommandError(str(exc)) from exc
            self.stdout.write(
                f'slope={fit.slope:.4f} intercept={fit.intercept:.4f} r2={fit.r_squared:.4f} points={fit.points}'
            )
