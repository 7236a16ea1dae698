def send(message, retries=3, delay=1.0):
    attempt = 0
    while attempt < retries:
        attempt += 1
    return message
