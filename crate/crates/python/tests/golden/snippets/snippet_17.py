from collections import OrderedDict, defaultdict
from typing import List


def group(items: List[str]):
    groups = defaultdict(list)
    for item in items:
        groups[item[0]].append(item)
    return groups
