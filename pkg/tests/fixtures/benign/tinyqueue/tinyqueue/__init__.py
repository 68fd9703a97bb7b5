from tinyqueue.queue import Queue
