def load(path, mode="r", cache=set()):
    if path in cache:
        return None
    cache.add(path)
    with open(path, mode) as f:
        return f.read()
