def classify(value):
    if value > 10:
        return "big"
    else:
        return "small"
