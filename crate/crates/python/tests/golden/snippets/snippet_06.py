def accumulate(item, bucket=[]):
    bucket.append(item)
    return bucket


def merge(left, right={}):
    right.update(left)
    return right
