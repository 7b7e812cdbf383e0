"""
Flagforge — Count the flags of a stored family.
Run: python manage.py count --in family.json [--bruteforce] [--profile] [--split 1]

Prints the exact count as a bare integer on the first line.
"""

import sys
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from core.exceptions import FlagforgeError
from core.services.codec import PROFILE_COLUMNS, load_family, write_profile_csv
from core.services.counting import count_flags_bruteforce, count_flags_dp, degree_profile, degree_split


class Command(BaseCommand):
    help = (
        'Count flags of a layered-family JSON file. --profile also writes the degree profile '
        f'of a point/line/plane family as CSV with columns {",".join(PROFILE_COLUMNS)}.'
    )

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='input', required=True, help='Family JSON file')
        parser.add_argument('--bruteforce', action='store_true', help='Enumerate all tuples (small families only)')
        parser.add_argument('--profile', action='store_true', help='Write the (k, l) degree profile')
        parser.add_argument('--split', type=int, default=None, metavar='LEVEL',
                            help='Report the flag counts of the degree split of an interior level')
        parser.add_argument('--out', default=None, help='CSV path for --profile (default: stdout)')

    def handle(self, *args, **options):
        path = Path(options['input'])
        if not path.exists():
            raise CommandError(f'No such file: {path}')
        try:
            family = load_family(path)
            count = count_flags_bruteforce(family) if options['bruteforce'] else count_flags_dp(family)
            self.stdout.write(str(count))

            if options['split'] is not None:
                index = options['split']
                parts = degree_split(family, index)
                for name, flats in zip(('heavy', 'prefix_light', 'suffix_light'), parts):
                    partial = count_flags_dp(family.replace_level(index, flats))
                    self.stdout.write(f'{name}: {len(flats)} flats, {partial} flags')

            if options['profile']:
                profile = degree_profile(family)
                if options['out']:
                    with open(options['out'], 'w', encoding='utf-8', newline='') as stream:
                        write_profile_csv(profile, stream)
                    self.stdout.write(self.style.SUCCESS(f'Profile written to {options["out"]}'))
                else:
                    write_profile_csv(profile, self.stdout)
        except FlagforgeError as exc:
            raise CommandError(str(exc)) from exc
