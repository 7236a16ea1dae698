def fetch(url, retries=3):
    if retries < 0:
        raise Exception("bad retries")
    return url
